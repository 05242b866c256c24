// Spherical maximal function of a point mass, and the Krawtchouk decay constant.
#include <cstdio>

#include "hcube/krawtchouk.hpp"
#include "hcube/maximal.hpp"

int main() {
  using namespace hcube;
  const int n = 10;
  const auto S = spherical_family(KrawtchoukTable(n), n);
  const auto m = maximal_apply(S, CubeFunction::delta(n, 0));
  std::printf("n=%d  ||M delta||_1 = %.12g (exact %s)\n", n, lp_norm(m.values, 1.0), l1_norm_check(n).str().c_str());
  for (Vertex x : {Vertex{0}, Vertex{1}, Vertex{3}, Vertex{31}})
    std::printf("x=%4u  M delta(x) = %.6g  radius %u\n", static_cast<unsigned>(x), m.values[x], static_cast<unsigned>(m.selector[x]));
  const auto d = decay_constants(32);
  std::printf("c_cert over 2..32 = %.12g\n", d.c_cert);
}
