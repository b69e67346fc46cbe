int level;
int *cursor = &level;
void main() {
  int v = *cursor;
  *cursor = v + 4;
}
void ISR_1() {
  level = 0;
}
