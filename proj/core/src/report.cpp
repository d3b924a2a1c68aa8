// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "macopt/errors.hpp"
#include "macopt/harness.hpp"

namespace macopt {

namespace {

constexpr double kWidth = 760, kHeight = 480;
constexpr double kLeft = 80, kRight = 180, kTop = 40, kBottom = 60;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b", "#e377c2", "#17becf"};

enum class Axis { kUsers, kDistance, kSnr };

double x_of(const PointSummary& p, Axis a) {
  switch (a) {
    case Axis::kUsers: return p.users;
    case Axis::kDistance: return p.distance_m;
    case Axis::kSnr: return p.snr_db;
  }
  return 0.0;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::string write_svg(const ExperimentResult& result, Metric metric) {
  const std::string_view suffix = metric == Metric::kSumRate ? "-rate" : "-energy";
  std::vector<PointSummary> pts;
  for (auto& p : aggregate(result))
    if (ends_with(p.scheme, suffix) && p.converged > 0) pts.push_back(std::move(p));
  if (pts.empty()) throw EmptyResultError("write_svg: no converged rows for this metric");

  auto varies = [&](auto get) {
    return std::any_of(pts.begin(), pts.end(), [&](const PointSummary& p) { return get(p) != get(pts.front()); });
  };
  Axis axis = Axis::kSnr;
  if (varies([](const PointSummary& p) { return static_cast<double>(p.users); })) {
    axis = Axis::kUsers;
  } else if (varies([](const PointSummary& p) { return p.distance_m; })) {
    axis = Axis::kDistance;
  }

  auto stats = [&](const PointSummary& p) -> const Stats& {
    return metric == Metric::kSumRate ? p.sum_rate_mbps : p.total_energy_mw;
  };
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& p : pts) {
    const double x = x_of(p, axis);
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, stats(p).mean - stats(p).ci95);
    y1 = std::max(y1, stats(p).mean + stats(p).ci95);
  }
  // energy spans decades across a distance sweep
  const bool log_y = metric == Metric::kEnergy && y0 > 0 && y1 / y0 > 100.0;
  auto ty = [&](double v) { return log_y ? std::log10(std::max(v, 1e-300)) : v; };
  double ly0 = ty(y0), ly1 = ty(y1);
  if (x1 == x0) x0 -= 1, x1 += 1;
  if (ly1 == ly0) ly0 -= 1, ly1 += 1;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (ty(y) - ly0) / (ly1 - ly0)) * ph; };

  const char* xlabel = axis == Axis::kUsers ? "users" : axis == Axis::kDistance ? "distance [m]" : "receive SNR [dB]";
  const std::string ylabel = metric == Metric::kSumRate ? "sum rate [Mbps]"
                                                         : log_y ? "total energy [mW, log]" : "total energy [mW]";

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\"" << kTop + ph
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + ph
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0;
    const double yl = ly0 + (ly1 - ly0) * i / 4.0;
    const double yv = log_y ? std::pow(10.0, yl) : yl;
    os << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(kTop + ph + 18) << "\" text-anchor=\"middle\">" << tick(xv)
       << "</text>\n"
       << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">" << tick(yv)
       << "</text>\n";
  }
  os << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 15) << "\" text-anchor=\"middle\">" << xlabel
     << "</text>\n"
     << "<text transform=\"translate(18 " << num(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(ylabel) << "</text>\n";

  std::vector<std::string> schemes;
  for (const auto& p : pts)
    if (std::find(schemes.begin(), schemes.end(), p.scheme) == schemes.end()) schemes.push_back(p.scheme);
  for (std::size_t k = 0; k < schemes.size(); ++k) {
    std::map<double, const PointSummary*> line;
    for (const auto& p : pts)
      if (p.scheme == schemes[k]) line.emplace(x_of(p, axis), &p);
    const char* color = kColors[k % std::size(kColors)];
    os << "<g>\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    bool first = true;
    for (const auto& [x, p] : line) {
      os << (first ? "" : " ") << num(px(x)) << ',' << num(py(stats(*p).mean));
      first = false;
    }
    os << "\"/>\n";
    for (const auto& [x, p] : line) {
      const Stats& st = stats(*p);
      if (st.ci95 > 0)
        os << "<line x1=\"" << num(px(x)) << "\" y1=\"" << num(py(st.mean - st.ci95)) << "\" x2=\"" << num(px(x))
           << "\" y2=\"" << num(py(st.mean + st.ci95)) << "\" stroke=\"" << color << "\"/>\n";
    }
    const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
    os << "<line x1=\"" << num(kLeft + pw + 15) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(kLeft + pw + 40)
       << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
       << "<text x=\"" << num(kLeft + pw + 46) << "\" y=\"" << num(ly + 4) << "\">" << escape(schemes[k])
       << "</text>\n</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void save_svg(const ExperimentResult& result, Metric metric, const std::string& path) {
  const std::string text = write_svg(result, metric);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os << text;
  if (!os) throw Error("write to '" + path + "' failed");
}

}  // namespace macopt
