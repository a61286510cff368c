#include "chordrec/posteriors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "chordrec/error.hpp"

namespace chordrec {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    const std::size_t comma = line.find(',', pos);
    const std::size_t end = comma == std::string_view::npos ? line.size() : comma;
    std::string_view field = line.substr(pos, end - pos);
    while (!field.empty() && std::isspace(static_cast<unsigned char>(field.front()))) field.remove_prefix(1);
    while (!field.empty() && std::isspace(static_cast<unsigned char>(field.back()))) field.remove_suffix(1);
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& value) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

void validate_posteriors(const PosteriorMatrix& p, double tolerance) {
  if (p.frames() == 0) throw ValidationError("posterior matrix has no frames");
  if (!(p.frame_rate > 0)) throw ValidationError("frame rate must be positive");
  for (Eigen::Index t = 0; t < p.frames(); ++t) {
    const auto row = p.probs.row(t);
    if (!row.allFinite() || (row.array() < 0).any()) {
      throw ValidationError("posterior row " + std::to_string(t) + " has negative or non-finite entries");
    }
    const double sum = row.sum();
    if (std::abs(sum - 1.0) > tolerance) {
      throw ValidationError("posterior row " + std::to_string(t) + " sums to " + std::to_string(sum));
    }
  }
}

PosteriorMatrix load_posteriors(std::istream& in, double frame_rate) {
  std::vector<std::array<double, kNumClasses>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (fields.size() != kNumClasses) {
      throw ShapeError("line " + std::to_string(line_no) + ": expected 25 columns, got " +
                       std::to_string(fields.size()));
    }
    std::array<double, kNumClasses> row{};
    bool numeric = true;
    for (std::size_t k = 0; k < fields.size(); ++k) numeric = numeric && parse_double(fields[k], row[k]);
    if (!numeric) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw ParseError("line " + std::to_string(line_no) + ": non-numeric posterior value");
    }
    double sum = 0;
    for (double v : row) {
      if (!std::isfinite(v) || v < 0) {
        throw ValidationError("line " + std::to_string(line_no) + ": negative or non-finite posterior");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-3) {
      throw ValidationError("line " + std::to_string(line_no) + ": row sums to " + std::to_string(sum) +
                            ", outside 1 +- 1e-3");
    }
    for (double& v : row) v = std::clamp(v / sum, kPosteriorFloor, 1.0);
    rows.push_back(row);
  }
  if (rows.empty()) throw ValidationError("posterior file has no rows");
  PosteriorMatrix p;
  p.frame_rate = frame_rate;
  p.probs.resize(static_cast<Eigen::Index>(rows.size()), kNumClasses);
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (int k = 0; k < kNumClasses; ++k) p.probs(static_cast<Eigen::Index>(t), k) = rows[t][static_cast<std::size_t>(k)];
  }
  return p;
}

PosteriorMatrix load_posteriors(const std::filesystem::path& path, double frame_rate) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open posterior file " + path.string());
  try {
    return load_posteriors(in, frame_rate);
  } catch (const ShapeError& e) {
    throw ShapeError(path.string() + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_posteriors(std::ostream& out, const PosteriorMatrix& p, bool header) {
  if (header) {
    for (int k = 0; k < kNumClasses; ++k) out << (k ? "," : "") << to_string(ChordClass(k));
    out << '\n';
  }
  out << std::setprecision(17);
  for (Eigen::Index t = 0; t < p.frames(); ++t) {
    for (int k = 0; k < kNumClasses; ++k) out << (k ? "," : "") << p.probs(t, k);
    out << '\n';
  }
}

void write_posteriors(const std::filesystem::path& path, const PosteriorMatrix& p, bool header) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  write_posteriors(out, p, header);
}

}  // namespace chordrec
