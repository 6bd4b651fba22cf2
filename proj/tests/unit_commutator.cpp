#include "doctest.h"
TEST_SUITE_BEGIN("commutator");
TEST_SUITE_END();
