int status = 0;
int seen;
void main() {
  status = 1;
  status = 0;
}
void ISR_2() {
  seen = status;
}
