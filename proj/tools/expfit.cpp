#include <cstdio>
int main() { std::puts("expfit: placeholder"); return 0; }
