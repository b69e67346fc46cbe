int ring[3];
int tail;
int dropped;
void main() {
  int i;
  for (i = 0; i < 3; i++) {
    ring[i] = i;
  }
  tail = tail + 1;
  if (tail > 2) {
    tail = 0;
  }
}
void ISR_1() {
  disable_isr(2);
  ring[tail] = 9;
  dropped++;
  enable_isr(2);
}
void ISR_2() {
  int peek = ring[1];
  if (dropped > 0)
    tail = 0;
}
