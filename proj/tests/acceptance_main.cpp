#include <cstdio>
int main(int argc, char**){ (void)argc; std::puts("acceptance placeholder"); return 0; }
