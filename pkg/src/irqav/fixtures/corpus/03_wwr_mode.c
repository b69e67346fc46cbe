int mode;
int shadow;
void main() {
  mode = 2;
  shadow = mode;
}
void ISR_1() {
  mode = 9;
}
