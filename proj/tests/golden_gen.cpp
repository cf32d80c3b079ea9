// One-shot generator for the frozen expected values used by the tests.  Run
// manually; the printed arrays are pasted into the test sources so the suite
// never recomputes its own oracle.

#include <cstdio>

#include "support/reference_ode.hpp"

namespace {

void print_vec(const char* name, const refode::Vec10& v) {
  std::printf("constexpr mfgprice::Vec10 %s = {\n", name);
  for (std::size_t i = 0; i < 10; ++i)
    std::printf("    %.17g%s\n", v[i], i + 1 < 10 ? "," : "");
  std::printf("};\n");
}

}  // namespace

int main() {
  // Storage-competition instance with preference shift alpha = 1/2:
  // c = 1, T = 1, b^S = (1, -1, 0), sigma^S = (0, 1, 0),
  // Psi(x) = (x - 1/2)^2 = 1/4 - x + x^2.
  const refode::ConstantCoeffProblem p{1.0, 1.0, -1.0, 0.0, 0.0, 1.0, 0.0};
  const refode::Vec10 terminal = {0.25, -1.0, 0.0, 0.0, 1.0,
                                  0.0,  0.0,  0.0, 0.0, 0.0};

  const refode::Vec10 euler = refode::euler_backward(p, terminal, 1.0, 1000000);
  const refode::Vec10 rich = refode::euler_richardson(p, terminal, 1.0, 1000000);

  std::printf("// t = 0 ten-vector, plain Euler, h = 1e-6\n");
  print_vec("kEulerAlphaHalf", euler);
  std::printf("\n// t = 0 ten-vector, Richardson-extrapolated Euler, h = 1e-6\n");
  print_vec("kOracleAlphaHalf", rich);

  // Derived scalars for the value/pricing tests (mean holdings 0, q_bar 1).
  const double a11 = rich[1], a12 = rich[2], a13 = rich[3];
  const double a22 = rich[5], a23 = rich[6];
  const double a24 = rich[7], a25 = rich[8], a26 = rich[9];
  const double w_bar = -(a11 + (a22 + 1.0) * 1.0) / (1.0 + a23);
  std::printf("\nconstexpr double kWBarAlphaHalf = %.17g;\n", w_bar);
  const double u0 = rich[0] + a12 * 1.0 + a13 * w_bar + a24 * 1.0 +
                    a25 * w_bar + a26 * w_bar * w_bar;
  std::printf("constexpr double kValueAtQbarAlphaHalf = %.17g;\n", u0);
  std::printf("constexpr double kA22AtZero = %.17g;\n", a22);
  std::printf("constexpr double kA23AtZero = %.17g;\n", a23);
  return 0;
}
