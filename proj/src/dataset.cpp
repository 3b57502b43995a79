#include "dpfl/dataset.hpp"

#include <algorithm>
#include <cmath>

namespace dpfl::data {

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::P: return "P";
    case Kind::Q: return "Q";
    case Kind::V: return "V";
    case Kind::V2: return "V2";
    case Kind::Theta: return "THETA";
    case Kind::PF: return "PF";
    case Kind::PT: return "PT";
    case Kind::QF: return "QF";
    case Kind::QT: return "QT";
    case Kind::Rij: return "RIJ";
    case Kind::Cij: return "CIJ";
  }
  return "?";
}

Kind kind_from_name(const std::string& s) {
  if (s == "P") return Kind::P;
  if (s == "Q") return Kind::Q;
  if (s == "V") return Kind::V;
  if (s == "V2") return Kind::V2;
  if (s == "THETA") return Kind::Theta;
  if (s == "PF") return Kind::PF;
  if (s == "PT") return Kind::PT;
  if (s == "QF") return Kind::QF;
  if (s == "QT") return Kind::QT;
  if (s == "RIJ") return Kind::Rij;
  if (s == "CIJ") return Kind::Cij;
  throw UnknownKind("unknown column kind '" + s + "'");
}

int Dataset::find_x(const Tag& t) const {
  for (std::size_t i = 0; i < x_tags.size(); ++i)
    if (x_tags[i] == t) return int(i);
  return -1;
}

int Dataset::find_y(const Tag& t) const {
  for (std::size_t i = 0; i < y_tags.size(); ++i)
    if (y_tags[i] == t) return int(i);
  return -1;
}

namespace {

void normalize_block(Mat& m, Vec& scale, std::vector<std::uint8_t>& zero) {
  scale.resize(m.cols());
  zero.assign(m.cols(), 0);
  for (int c = 0; c < m.cols(); ++c) {
    const double nrm = m.col(c).norm();
    if (nrm == 0.0) {
      scale[c] = 1.0;
      zero[c] = 1;
    } else {
      scale[c] = nrm;
      m.col(c) /= nrm;
    }
  }
}

}  // namespace

Dataset normalize(const Dataset& d) {
  Dataset out = d;
  if (d.norm.normalized) {
    // already scaled: second application stores unit factors
    out.norm.x_scale.setOnes(d.x.cols());
    out.norm.y_scale.setOnes(d.y.cols());
    return out;
  }
  normalize_block(out.x, out.norm.x_scale, out.norm.x_zero);
  normalize_block(out.y, out.norm.y_scale, out.norm.y_zero);
  out.norm.normalized = true;
  return out;
}

Dataset denormalize(const Dataset& d) {
  if (!d.norm.normalized) return d;
  Dataset out = d;
  for (int c = 0; c < out.x.cols(); ++c) out.x.col(c) *= d.norm.x_scale[c];
  for (int c = 0; c < out.y.cols(); ++c) out.y.col(c) *= d.norm.y_scale[c];
  out.norm = NormState{};
  return out;
}

}  // namespace dpfl::data
