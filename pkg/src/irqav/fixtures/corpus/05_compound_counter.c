unsigned int events;
void main() {
  events += 2;
  events++;
}
void ISR_1() {
  events = 0;
}
