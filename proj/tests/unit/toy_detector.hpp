#pragma once

// Small synthetic detector inputs shared by the detector and service tests.

#include <random>
#include <string>
#include <vector>

#include "chromabehave/detector.hpp"

namespace toy {

using namespace chromabehave;
using namespace chromabehave::detector;

inline const std::vector<std::string> kRoles{"Engineer", "Manager"};

inline Eigen::VectorXd nd_for(int role, double o) {
  ingest::LdapRecord r;
  r.user = "U";
  r.role = kRoles[static_cast<std::size_t>(role)];
  r.ocean = {o, 0.5, 0.5, 0.5, 0.5};
  return non_dynamic(kRoles, r).values;
}

// Benign: R, G and B are near-copies of one texture. Malicious: R is an
// unrelated texture. This is the colour/grey contrast the encoder produces.
inline Sample toy_sample(std::mt19937_64& rng, bool malicious, int user) {
  std::uniform_int_distribution<int> tex(40, 215), jitter(-4, 4);
  Sample s;
  for (int p = 0; p < encoder::kImagePixels; ++p) {
    const int t = tex(rng);
    for (int c = 0; c < 3; ++c) s.image.at(p, c) = static_cast<std::uint8_t>(t + jitter(rng));
    if (malicious) s.image.at(p, 0) = static_cast<std::uint8_t>(tex(rng));
  }
  s.image.user = "U" + std::to_string(user);
  s.nd = nd_for(user % 2, 0.3);
  s.label = malicious ? 1 : 0;
  s.scenario = malicious ? features::Label::Scenario1 : features::Label::Benign;
  return s;
}

inline std::vector<Sample> toy_set(std::uint64_t seed, int benign, int malicious) {
  std::mt19937_64 rng(seed);
  std::vector<Sample> out;
  for (int i = 0; i < benign; ++i) out.push_back(toy_sample(rng, false, i % 6));
  for (int i = 0; i < malicious; ++i) out.push_back(toy_sample(rng, true, i % 6));
  return out;
}

inline DetectorConfig small_config() {
  DetectorConfig c;
  c.conv1 = 6;
  c.conv2 = 8;
  c.dense = 12;
  c.batch = 32;
  c.epochs = 12;
  c.lr = 0.01;
  c.augment.replace = 1;
  return c;
}

}  // namespace toy
