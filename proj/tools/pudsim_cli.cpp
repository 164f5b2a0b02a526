// Placeholder while the library comes up; the real CLI lands with the
// control-unit and harness modules.
int main() { return 0; }
