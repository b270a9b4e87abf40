#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mbl/core.hpp"
#include "mbl/rng.hpp"

namespace mbl {

enum class DistKind { point_mass, uniform, two_point, scaled_uniform };

// Coefficient law for one disorder family. ScaledUniform(mu, a, b) draws
// mu * Uniform[a, b]; mu is the disorder-strength parameter, kept separate
// from the base interval so that sweeping it preserves the base law.
struct Distribution {
  DistKind kind = DistKind::point_mass;
  double a = 0.0;      // point value / lower endpoint / first atom
  double b = 0.0;      // upper endpoint / second atom
  double p = 0.0;      // probability of the first atom
  double scale = 1.0;  // disorder strength for scaled_uniform

  static Distribution point_mass(double v) {
    Distribution d;
    d.kind = DistKind::point_mass;
    d.a = v;
    return d;
  }

  static Distribution uniform(double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("uniform requires a < b");
    Distribution d;
    d.kind = DistKind::uniform;
    d.a = lo;
    d.b = hi;
    return d;
  }

  static Distribution two_point(double v1, double v2, double prob) {
    if (!(prob >= 0.0 && prob <= 1.0)) {
      throw std::invalid_argument("two_point requires 0 <= p <= 1");
    }
    Distribution d;
    d.kind = DistKind::two_point;
    d.a = v1;
    d.b = v2;
    d.p = prob;
    return d;
  }

  static Distribution scaled_uniform(double mu, double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("scaled_uniform requires a < b");
    Distribution d;
    d.kind = DistKind::scaled_uniform;
    d.a = lo;
    d.b = hi;
    d.scale = mu;
    return d;
  }

  double sample(rng::Stream& stream) const {
    switch (kind) {
      case DistKind::point_mass:
        return a;
      case DistKind::uniform:
        return a + (b - a) * stream.next_unit();
      case DistKind::two_point:
        return stream.next_unit() < p ? a : b;
      case DistKind::scaled_uniform:
        return scale * (a + (b - a) * stream.next_unit());
    }
    throw std::logic_error("unreachable distribution kind");
  }

  double min_support() const {
    switch (kind) {
      case DistKind::point_mass:
        return a;
      case DistKind::uniform:
        return a;
      case DistKind::two_point:
        return std::min(a, b);
      case DistKind::scaled_uniform:
        return scale >= 0.0 ? scale * a : scale * b;
    }
    throw std::logic_error("unreachable distribution kind");
  }

  double max_support() const {
    switch (kind) {
      case DistKind::point_mass:
        return a;
      case DistKind::uniform:
        return b;
      case DistKind::two_point:
        return std::max(a, b);
      case DistKind::scaled_uniform:
        return scale >= 0.0 ? scale * b : scale * a;
    }
    throw std::logic_error("unreachable distribution kind");
  }

  // Absolutely continuous law with bounded density, compactly supported in
  // [0, inf): the spring-constant assumption of the oscillator model.
  bool satisfies_assumption_a() const {
    return (kind == DistKind::uniform || kind == DistKind::scaled_uniform) &&
           min_support() >= 0.0;
  }

  bool has_atom_at_zero() const {
    switch (kind) {
      case DistKind::point_mass:
        return a == 0.0;
      case DistKind::two_point:
        return (a == 0.0 && p > 0.0) || (b == 0.0 && p < 1.0);
      default:
        return false;
    }
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind) {
      case DistKind::point_mass:
        os << "point:" << a;
        break;
      case DistKind::uniform:
        os << "uniform:" << a << "," << b;
        break;
      case DistKind::two_point:
        os << "twopoint:" << a << "," << b << "," << p;
        break;
      case DistKind::scaled_uniform:
        os << "scaled-uniform:" << scale << "," << a << "," << b;
        break;
    }
    return os.str();
  }
};

// Parses "point:v", "uniform:a,b", "twopoint:v1,v2,p", "scaled-uniform:mu,a,b".
inline Distribution parse_distribution(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("distribution spec needs kind:params, got '" +
                                std::string(text) + "'");
  }
  const std::string kind(text.substr(0, colon));
  std::vector<double> args;
  {
    std::string rest(text.substr(colon + 1));
    std::istringstream is(rest);
    std::string tok;
    while (std::getline(is, tok, ',')) {
      size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        throw std::invalid_argument("bad number '" + tok +
                                    "' in distribution spec");
      }
      if (used != tok.size()) {
        throw std::invalid_argument("bad number '" + tok +
                                    "' in distribution spec");
      }
      args.push_back(v);
    }
  }
  auto need = [&](size_t n) {
    if (args.size() != n) {
      throw std::invalid_argument("distribution '" + kind + "' needs " +
                                  std::to_string(n) + " parameters");
    }
  };
  if (kind == "point") {
    need(1);
    return Distribution::point_mass(args[0]);
  }
  if (kind == "uniform") {
    need(2);
    return Distribution::uniform(args[0], args[1]);
  }
  if (kind == "twopoint") {
    need(3);
    return Distribution::two_point(args[0], args[1], args[2]);
  }
  if (kind == "scaled-uniform") {
    need(3);
    return Distribution::scaled_uniform(args[0], args[1], args[2]);
  }
  throw std::invalid_argument("unknown distribution kind '" + kind + "'");
}

// Draws one coefficient family for one sample: count values from the stream
// seeded by (master, sample_index, family).
inline Vector sample_vector(const Distribution& dist, int count,
                            std::uint64_t master, std::uint64_t sample_index,
                            std::string_view family) {
  rng::Stream stream(rng::derive_seed(master, sample_index, family));
  Vector out(count);
  for (int i = 0; i < count; ++i) out(i) = dist.sample(stream);
  return out;
}

}  // namespace mbl
