int DevVal = 0;
int main() {
  disable_isr(-1);
  enable_isr(1);
  if (DevVal < 5) {
    DevVal = 5;
  } else {
    DevVal = 0;
  }
  return 0;
}
void ISR_1() {
  enable_isr(2);
  DevVal = 8;
}
void ISR_2() {
  if (DevVal == 0) DevVal = 1;
}
void ISR_3() {
  DevVal = DevVal + 3;
}
