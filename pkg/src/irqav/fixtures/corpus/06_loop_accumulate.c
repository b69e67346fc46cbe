int total;
int step = 1;
void main() {
  int i;
  for (i = 0; i < 2; i++) {
    total = total + step;
  }
}
void ISR_1() {
  step = 3;
}
