#include "qtransport/conformation.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "qtransport/errors.hpp"

namespace qtransport {

namespace {

Vec3 uniform_in_ball(SampleStream& rng) {
  // Rejection from the bounding cube; acceptance pi/6.
  for (;;) {
    const Vec3 r{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                 rng.uniform(0.0, 1.0)};
    if (inside_ball(r)) return r;
  }
}

bool far_from_all(const Vec3& r, const std::vector<Vec3>& placed) {
  for (const auto& p : placed) {
    if ((r - p).norm() <= kMinSeparation) return false;
  }
  return true;
}

}  // namespace

bool inside_ball(const Vec3& r) noexcept {
  return (r - kBallCenter).norm() <= kBallRadius;
}

Vec3 project_into_ball(const Vec3& r) noexcept {
  const Vec3 offset = r - kBallCenter;
  const double norm = offset.norm();
  if (norm <= kBallRadius) return r;
  double scale = kBallRadius / norm;
  Vec3 projected = kBallCenter + scale * offset;
  while (!inside_ball(projected)) {
    scale = std::nextafter(scale, 0.0);
    projected = kBallCenter + scale * offset;
  }
  return projected;
}

double min_pair_distance(const Conformation& conf) noexcept {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < conf.size(); ++i) {
    for (std::size_t j = i + 1; j < conf.size(); ++j) {
      best = std::min(best, (conf.positions[i] - conf.positions[j]).norm());
    }
  }
  return best;
}

void validate(const Conformation& conf) {
  const std::size_t n = conf.size();
  if (n < 2) throw InvalidArgument("conformation needs at least 2 sites");
  if (conf.input_index >= n || conf.output_index >= n) {
    throw InvalidArgument("input/output index out of range");
  }
  if (conf.input_index == conf.output_index) {
    throw InvalidArgument("input and output must be distinct sites");
  }
  if (!(conf.alpha > 0.0) || !std::isfinite(conf.alpha)) {
    throw InvalidArgument("alpha must be positive and finite");
  }
  if (conf.positions[conf.input_index] != Vec3(0.0, 0.0, 0.0) ||
      conf.positions[conf.output_index] != Vec3(0.0, 0.0, 1.0)) {
    throw InvalidArgument("input/output sites must sit at (0,0,0) and (0,0,1)");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (i == conf.input_index || i == conf.output_index) continue;
    if (!inside_ball(conf.positions[i])) {
      std::ostringstream msg;
      msg << "site " << i << " lies outside the unit-diameter ball";
      throw InvalidArgument(msg.str());
    }
  }
  if (min_pair_distance(conf) <= kMinSeparation) {
    throw DegenerateGeometry("two sites closer than the minimum separation");
  }
}

Conformation sample_conformation(std::size_t n_sites, SampleStream& rng) {
  if (n_sites < 2) throw InvalidArgument("n_sites must be >= 2");
  Conformation conf;
  conf.positions.reserve(n_sites);
  conf.positions.emplace_back(0.0, 0.0, 0.0);
  conf.input_index = 0;
  for (std::size_t i = 1; i + 1 < n_sites; ++i) {
    Vec3 r = uniform_in_ball(rng);
    while (!far_from_all(r, conf.positions) ||
           (r - Vec3(0.0, 0.0, 1.0)).norm() <= kMinSeparation) {
      r = uniform_in_ball(rng);
    }
    conf.positions.push_back(r);
  }
  conf.positions.emplace_back(0.0, 0.0, 1.0);
  conf.output_index = n_sites - 1;
  return conf;
}

Conformation pole_pair(double alpha) {
  Conformation conf;
  conf.positions = {Vec3(0.0, 0.0, 0.0), Vec3(0.0, 0.0, 1.0)};
  conf.input_index = 0;
  conf.output_index = 1;
  conf.alpha = alpha;
  return conf;
}

Conformation load_conformation(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open conformation file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
    Conformation conf;
    conf.alpha = doc.value("alpha", 1.0);
    conf.input_index = doc.at("input").get<std::size_t>();
    conf.output_index = doc.at("output").get<std::size_t>();
    for (const auto& p : doc.at("positions")) {
      if (p.size() != 3) throw ConfigError("position entries must have 3 coordinates");
      conf.positions.emplace_back(p[0].get<double>(), p[1].get<double>(),
                                  p[2].get<double>());
    }
    validate(conf);
    return conf;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": malformed conformation file: " + e.what());
  }
}

void save_conformation(const Conformation& conf, const std::string& path) {
  nlohmann::json doc;
  doc["alpha"] = conf.alpha;
  doc["input"] = conf.input_index;
  doc["output"] = conf.output_index;
  doc["positions"] = nlohmann::json::array();
  for (const auto& p : conf.positions) {
    doc["positions"].push_back({p.x(), p.y(), p.z()});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write conformation file: " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace qtransport
