#include "brwlab/gallery.hpp"

namespace brwlab {

const std::vector<GalleryEntry>& gallery() {
  static const std::vector<GalleryEntry> entries{
      {"det_binary", R"({
  // Two children at +1 and -1; W_n is identically 1.
  "name": "det_binary",
  "description": "deterministic binary BRW with displacements +1 and -1",
  "experiment": "renewal",
  "seed": 42,
  "replicas": 1,
  "model": {
    "gamma": 1.0,
    "offspring": {"law": "deterministic", "k": 2},
    "displacement": {"law": "fixed", "positions": [1.0, -1.0]},
    "coupling": "fanout"
  },
  "functions": {"a": "a:x^0", "b": "b:x"},
  "params": {"xs": [12, 24], "moment_depth": 10, "moment_replicas": 1000}
}
)"},
      {"gw_geometric", R"({
  "name": "gw_geometric",
  "description": "Galton-Watson process with geometric offspring of mean 2",
  "experiment": "series",
  "seed": 42,
  "replicas": 10000,
  "model": {
    "gamma": 0.0,
    "offspring": {"law": "geometric", "p": 0.3333333333333333}
  },
  "functions": {"a": "a:x^0", "b": "b:x"},
  "params": {"m_max": 30, "depth": 60, "n_max": 10, "moment_depth": 30, "moment_replicas": 400000}
}
)"},
      {"brw_poisson_normal", R"({
  "name": "brw_poisson_normal",
  "description": "Poisson(3) offspring with N(0,1) displacements",
  "experiment": "sizebias",
  "seed": 42,
  "replicas": 20000,
  "model": {
    "gamma": 1.0,
    "offspring": {"law": "poisson", "lambda": 3.0},
    "displacement": {"law": "normal", "mean": 0.0, "sd": 1.0},
    "non_arithmetic": true
  },
  "functions": {"a": "a:x^0"},
  "params": {"identity_n": [1, 2, 3], "mu_replicas": 100000, "moment_depth": 6, "moment_replicas": 200000}
}
)"},
      {"brw_zeta", R"({
  "name": "brw_zeta",
  "description": "zeta(4) offspring with N(0,1) displacements",
  "experiment": "martingale",
  "seed": 42,
  "replicas": 10000,
  "model": {
    "gamma": 0.5,
    "offspring": {"law": "zeta", "s": 4.0},
    "displacement": {"law": "normal", "mean": 0.0, "sd": 1.0},
    "non_arithmetic": true
  },
  "functions": {"a": "a:x^0"},
  "params": {"n_max": 10, "moment_depth": 20, "moment_replicas": 400000}
}
)"},
      {"perpetuity_dickman", R"({
  "name": "perpetuity_dickman",
  "description": "Dickman perpetuity, M uniform on (0,1) and Q = 1",
  "experiment": "perpetuity",
  "seed": 42,
  "replicas": 100000,
  "perpetuity": {
    "m": {"law": "uniform", "lo": 0.0, "hi": 1.0},
    "q": {"law": "const", "value": 1.0}
  },
  "functions": {"b": "b:x"},
  "params": {"moment_replicas": 400000}
}
)"},
      {"walk_cramer", R"({
  "name": "walk_cramer",
  "description": "random walk with Exp(1) - 2 steps",
  "experiment": "walk",
  "seed": 42,
  "replicas": 40000,
  "walk": {"step": {"law": "shifted_exp", "rate": 1.0, "shift": 2.0}},
  "params": {"tail_lo": 2, "tail_hi": 6, "ladder_x": 1.0, "moment_replicas": 400000}
}
)"},
      {"walk_normal", R"({
  "name": "walk_normal",
  "description": "random walk with N(1,1) steps and b(n) = n",
  "experiment": "walk",
  "seed": 42,
  "replicas": 1,
  "walk": {"step": {"law": "normal", "mean": 1.0, "sd": 1.0}, "cdf": "exact"},
  "functions": {"b": "b:x"},
  "params": {"log_x_km": 25, "log_x_haan": 20}
}
)"},
      {"gw_divergent", R"({
  // P{L >= k} ~ 1 / (k (log k)^2.1): E L log L < inf, E L (log L)^2 = inf.
  "name": "gw_divergent",
  "description": "Galton-Watson process with a log-Pareto offspring tail",
  "experiment": "moments",
  "seed": 42,
  "replicas": 40000,
  "model": {
    "gamma": 0.0,
    "offspring": {"law": "log_pareto", "power": 2.1, "k0": 2}
  },
  "functions": {"a": "a:x^0"},
  "params": {"moment_depth": 6, "moment_replicas": 400000, "n_max": 6, "expect_divergent": true}
}
)"},
      {"perpetuity_logpareto", R"({
  // P{log Q > t} = t^-1.5: E log+ Q < inf, E (log+ Q)^2 = inf.
  "name": "perpetuity_logpareto",
  "description": "perpetuity with M uniform on (0,1) and log-Pareto Q",
  "experiment": "moments",
  "seed": 42,
  "replicas": 40000,
  "perpetuity": {
    "m": {"law": "uniform", "lo": 0.0, "hi": 1.0},
    "q": {"law": "log_pareto", "index": 1.5, "scale": 1.0}
  },
  "functions": {"b": "b:x"},
  "params": {"moment_replicas": 400000, "expect_divergent": true}
}
)"},
  };
  return entries;
}

}  // namespace brwlab
