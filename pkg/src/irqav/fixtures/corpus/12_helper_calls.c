int temp;
int read_temp() {
  return temp;
}
void set_temp(int t) {
  temp = t;
}
void main() {
  int t = read_temp();
  set_temp(t + 1);
}
void ISR_1() {
  set_temp(20);
}
