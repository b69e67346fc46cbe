int credits = 3;
int spent;
void main() {
  disable_isr(1);
  credits = credits - 1;
  enable_isr(1);
  spent = spent + 1;
  spent = 0;
}
void ISR_1() {
  credits = 3;
  spent = 5;
}
