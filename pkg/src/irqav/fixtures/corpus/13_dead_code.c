int load;
void unused_a(int n) {
  int k = 0;
  while (k < n) {
    load = load + k;
    k++;
  }
  if (load > 100)
    load = 100;
  load = load / 2;
}

void unused_b(int n) {
  int j;
  for (j = 0; j < n; j++) {
    load = load - 1;
  }
  if (load < 0) {
    load = 0;
  }
  load = load + n;
}

void main() {
  load = 4;
  load = load * 2;
}
void ISR_1() {
  load = 1;
}
