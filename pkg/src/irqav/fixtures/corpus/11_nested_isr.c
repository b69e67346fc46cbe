int queue;
void main() {
  queue = 1;
}
void ISR_1() {
  int q = queue;
  queue = q + 1;
}
void ISR_2() {
  queue = 0;
}
