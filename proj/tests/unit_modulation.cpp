#include "doctest.h"
TEST_SUITE_BEGIN("modulation");
TEST_SUITE_END();
