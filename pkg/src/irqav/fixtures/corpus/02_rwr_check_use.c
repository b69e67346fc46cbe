int speed = 50;
int margin;
void main() {
  if (speed > 30) {
    margin = speed - 30;
  }
}
void ISR_1() {
  speed = 10;
}
