// Compares the OpenMP kernel drivers against the serial reference: wall time
// per call and the observed speedup, plus a bitwise equality check, for the
// matrix shapes that dominate training.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fedmlc/kernels.hpp"
#include "fedmlc/loss.hpp"
#include "fedmlc/models.hpp"
#include "fedmlc/rng.hpp"
#include "fedmlc/train.hpp"

using namespace fedmlc;

namespace {

using Clock = std::chrono::steady_clock;

Matrix random_matrix(std::size_t rows, std::size_t cols, RngStream& rng) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
    return m;
}

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm-up
    const auto start = Clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto stop = Clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

void row(const std::string& name, double serial_ms, double parallel_ms, bool bitwise) {
    std::printf("%-36s %10.3f %10.3f %8.2fx   %s\n", name.c_str(), serial_ms, parallel_ms,
                serial_ms / parallel_ms, bitwise ? "bitwise-equal" : "MISMATCH");
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads: %d\n\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP; both columns run serially\n\n");
#endif
    std::printf("%-36s %10s %10s %9s\n", "kernel", "serial ms", "omp ms", "speedup");

    RngStream rng(7);
    struct Shape {
        std::size_t n, d, h;
    };
    for (const Shape s : {Shape{256, 768, 896}, Shape{1024, 768, 896}, Shape{4096, 64, 128}}) {
        const Matrix x = random_matrix(s.n, s.d, rng);
        const Matrix w = random_matrix(s.d, s.h, rng);
        const Matrix dy = random_matrix(s.n, s.h, rng);
        const std::string tag =
            std::to_string(s.n) + "x" + std::to_string(s.d) + "x" + std::to_string(s.h);

        Matrix out_serial = kernels::serial::matmul(x, w);
        Matrix out_par = kernels::matmul(x, w);
        row("matmul " + tag, time_ms([&] { kernels::serial::matmul(x, w); }, 3),
            time_ms([&] { kernels::matmul(x, w); }, 3), out_serial.data == out_par.data);

        Matrix dw_serial = kernels::serial::matmul_at_b(x, dy);
        Matrix dw_par = kernels::matmul_at_b(x, dy);
        row("matmul_at_b " + tag, time_ms([&] { kernels::serial::matmul_at_b(x, dy); }, 3),
            time_ms([&] { kernels::matmul_at_b(x, dy); }, 3), dw_serial.data == dw_par.data);

        Matrix dx_serial = kernels::serial::matmul_a_bt(dy, w);
        Matrix dx_par = kernels::matmul_a_bt(dy, w);
        row("matmul_a_bt " + tag, time_ms([&] { kernels::serial::matmul_a_bt(dy, w); }, 3),
            time_ms([&] { kernels::matmul_a_bt(dy, w); }, 3), dx_serial.data == dx_par.data);
    }

    // one full training step at a realistic batch shape
    {
        const std::size_t n = 256, d = 768, c = 512;
        ModelSpec spec = ModelSpec::make_mlp(d, c);
        ModelParams model = build_model(spec, 1);
        const Matrix x = random_matrix(n, d, rng);
        Matrix y(n, c);
        for (double& v : y.data) v = rng.bernoulli(0.05) ? 1.0 : 0.0;
        HybridLossConfig loss_cfg;
        const double step_ms = time_ms(
            [&] {
                RngStream drop(11);
                ForwardCache cache;
                const Matrix probs = forward_train(model, x, drop, cache);
                const Matrix grad = hybrid_loss_grad(probs, y, loss_cfg);
                backward(model, cache, grad);
            },
            3);
        std::printf("\nmlp %zux%zu->%zu fwd+bwd step: %.3f ms\n", n, d, c, step_ms);
    }
    return 0;
}
