int gauge;
void main() {
  disable_isr(-1);
  gauge = gauge + 1;
  gauge = gauge * 2;
}
void ISR_1() {
  gauge = 0;
}
