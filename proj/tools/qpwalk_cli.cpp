#include <cstdio>
int main() { std::puts("qpwalk"); }
