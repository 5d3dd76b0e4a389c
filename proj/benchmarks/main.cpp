#include <benchmark/benchmark.h>

// Ubuntu's libbenchmark_main.a ships LTO-only objects that other GCC point
// releases cannot link, so the entry point lives here.
BENCHMARK_MAIN();
