#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "speechmark/digest.hpp"
#include "speechmark/embed.hpp"
#include "speechmark/errors.hpp"
#include "speechmark/fs_util.hpp"
#include "speechmark/rng.hpp"

namespace speechmark::synth {

namespace {

const char* kStarters[] = {"Luego",  "Despues",  "Entonces", "Primero",
                           "Siempre", "Normalmente", "Ahora", "Todos"};

const char* kWords[] = {
    "me",      "levanto",  "temprano", "desayuno", "cafe",    "con",     "pan",
    "trabajo", "en",       "la",       "casa",     "voy",     "al",      "mercado",
    "camino",  "por",      "el",       "parque",   "cocino",  "almuerzo", "arroz",
    "frijoles", "despues", "duermo",   "una",      "siesta",  "veo",     "television",
    "leo",     "periodico", "hablo",   "mi",       "familia", "los",     "vecinos",
    "riego",   "las",      "plantas",  "jardin",   "limpio",  "cocina",  "preparo",
    "cena",    "salgo",    "caminar",  "tarde",    "noche",   "escucho", "radio",
    "musica",  "visito",   "mis",      "nietos",   "juego",   "domino",  "tomo",
    "jugo",    "fruta",    "compro",   "tienda",   "esquina", "rezo",    "iglesia",
    "descanso"};

double clamp_round1(double v, double lo, double hi) {
  v = std::clamp(v, lo, hi);
  return std::round(v * 10.0) / 10.0;
}

double gauss(CounterRng& rng, double mean, double stddev) {
  const double u1 = 1.0 - rng.next_unit();  // (0, 1]
  const double u2 = rng.next_unit();
  return mean + stddev * std::sqrt(-2.0 * std::log(u1)) *
                    std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::string format1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

std::string make_transcript(CounterRng& rng) {
  const int sentences = 5 + static_cast<int>(rng.next_below(5));
  std::string text;
  for (int s = 0; s < sentences; ++s) {
    if (s) text += " ";
    text += kStarters[rng.next_below(std::size(kStarters))];
    const int words = 6 + static_cast<int>(rng.next_below(7));
    for (int w = 0; w < words; ++w) {
      text += " ";
      text += kWords[rng.next_below(std::size(kWords))];
    }
    text += ".";
  }
  return text;
}

struct Row {
  std::string id;
  bool pd = false;
  bool male = false;
  double age = 0.0;
  int updrs = 0;
  double hy = 0.0;
  double years = 0.0;
  std::string transcript;
};

}  // namespace

void generate_synthetic_corpus(const SyntheticOptions& options) {
  if (options.n_per_class < 10)
    throw ValidationError("gen-synthetic: n_per_class must be >= 10 (the emitted config "
                          "uses 10-fold cross-validation)");
  if (options.dimension < 2)
    throw ValidationError("gen-synthetic: dimension must be >= 2");
  if (options.out.empty()) throw ValidationError("gen-synthetic: output directory required");

  const auto seed = static_cast<std::uint64_t>(options.seed);
  std::filesystem::create_directories(options.out / "transcripts");

  const int n = options.n_per_class;
  std::vector<Row> rows;
  rows.reserve(static_cast<std::size_t>(2 * n));

  // PD demographics first; HC ages are jittered copies of same-sex PD ages,
  // which keeps the two groups age-matched for any seed.
  CounterRng demo(derive_key(seed, "demographics"));
  for (int i = 0; i < n; ++i) {
    Row r;
    char id[16];
    std::snprintf(id, sizeof(id), "pd%03d", i + 1);
    r.id = id;
    r.pd = true;
    r.male = (i % 2 == 0);
    r.age = r.male ? clamp_round1(gauss(demo, 61.3, 11.4), 33.0, 81.0)
                   : clamp_round1(gauss(demo, 60.7, 7.3), 49.0, 75.0);
    r.updrs = static_cast<int>(std::clamp(std::round(gauss(demo, 37.7, 18.0)), 6.0, 93.0));
    r.hy = 1.0 + 0.5 * static_cast<double>(demo.next_below(7));
    r.years = clamp_round1(0.4 + std::fabs(gauss(demo, 8.0, 7.5)), 0.4, 43.0);
    rows.push_back(std::move(r));
  }
  for (int i = 0; i < n; ++i) {
    Row r;
    char id[16];
    std::snprintf(id, sizeof(id), "hc%03d", i + 1);
    r.id = id;
    r.pd = false;
    r.male = (i % 2 == 0);
    const double matched_age = rows[static_cast<std::size_t>(i)].age;  // same sex parity
    const double jitter = 3.0 * demo.next_unit() - 1.5;
    r.age = r.male ? clamp_round1(matched_age + jitter, 31.0, 86.0)
                   : clamp_round1(matched_age + jitter, 49.0, 76.0);
    rows.push_back(std::move(r));
  }

  CounterRng text_rng(derive_key(seed, "transcripts"));
  std::set<std::string> seen;
  for (auto& r : rows) {
    r.transcript = make_transcript(text_rng);
    while (!seen.insert(r.transcript).second) r.transcript += " si";
  }

  std::string csv = "id,group,sex,age,updrs3,hy,years_post_dx,audio_path,transcript_path\n";
  for (const auto& r : rows) {
    csv += r.id;
    csv += r.pd ? ",PD," : ",HC,";
    csv += r.male ? "M," : "F,";
    csv += format1(r.age);
    if (r.pd) {
      csv += "," + std::to_string(r.updrs) + "," + format1(r.hy) + "," + format1(r.years);
    } else {
      csv += ",,,";
    }
    csv += ",,transcripts/" + r.id + ".txt\n";
    atomic_write_file(options.out / "transcripts" / (r.id + ".txt"), r.transcript + "\n");
  }
  atomic_write_file(options.out / "manifest.csv", csv);

  // Planted embeddings: the class signal lives in the pre-seeded cache, not
  // in the embedder. An offset of magnitude `signal` along a fixed direction
  // is added to each PD subject's unit base vector before renormalization.
  const auto dim = options.dimension;
  std::vector<double> direction(static_cast<std::size_t>(dim));
  {
    CounterRng dir_rng(derive_key(seed, "pd-signal-direction"));
    double norm_sq = 0.0;
    for (auto& x : direction) {
      x = dir_rng.next_symmetric();
      norm_sq += x * x;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& x : direction) x *= inv;
  }

  const auto cache_root = options.out / "cache";
  for (const auto& r : rows) {
    auto vec = embed::local_test_embed(r.transcript, dim, options.seed);
    if (r.pd && options.signal != 0.0) {
      double norm_sq = 0.0;
      for (std::size_t i = 0; i < vec.values.size(); ++i) {
        vec.values[i] += options.signal * direction[i];
        norm_sq += vec.values[i] * vec.values[i];
      }
      const double inv = 1.0 / std::sqrt(norm_sq);
      for (auto& x : vec.values) x *= inv;
    }
    const auto path = embed::vector_cache_path(cache_root, "local-test", dim,
                                               sha256_hex(r.transcript));
    embed::write_vector_file(path, vec);
  }

  nlohmann::json cfg;
  cfg["corpus"] = "manifest.csv";
  cfg["cache"] = "cache";
  cfg["out"] = "results";
  cfg["k"] = 10;
  cfg["seed"] = options.seed;
  cfg["workers"] = 4;
  cfg["nested_cv"] = false;
  cfg["models"] = nlohmann::json::array({{{"backend", "local_test"},
                                          {"model_name", "local-test"},
                                          {"native_dimension", options.dimension}}});
  atomic_write_file(options.out / "config.json", cfg.dump(2) + "\n");
}

}  // namespace speechmark::synth
