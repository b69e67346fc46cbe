struct port { int data; int flags; };
struct port uart;
void main() {
  uart.flags = 1;
  uart.data = 65;
  uart.flags = uart.flags | 2;
}
void ISR_1() {
  uart.flags = 0;
}
void ISR_2() {
  int d = uart.data;
}
