#include "qdark/qdark.hpp"
int main() { return 0; }
