char buf[4];
int head;
void main() {
  buf[0] = 1;
  buf[1] = 2;
  head = buf[0] + buf[1];
}
void ISR_1() {
  buf[0] = 7;
}
