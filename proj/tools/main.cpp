#include <cstdio>

int main() {
  std::puts("gdisc: placeholder");
  return 0;
}
