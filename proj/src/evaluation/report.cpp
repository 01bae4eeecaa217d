#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "natsr/error.hpp"
#include "natsr/evaluation.hpp"
#include "natsr/manifold.hpp"

namespace natsr {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Summary finite_summary(const std::vector<EvalRow>& rows, double EvalRow::*field) {
  std::vector<double> v;
  for (const EvalRow& r : rows)
    if (std::isfinite(r.*field)) v.push_back(r.*field);
  if (v.empty()) return {kNaN, kNaN, 0};
  return summarize(v);
}

std::string pm(const Summary& s, int precision) {
  if (s.count == 0) return "n/a";
  return fmt::format("{:.{}f} ± {:.{}f}", s.mean, precision, s.stddev, precision);
}

}  // namespace

double plausibility(const Tensor& sr, const Tensor& lr, const ResamplerSpec& spec) {
  return verify_membership(sr, lr, spec);
}

EvalAggregate aggregate_rows(const std::vector<EvalRow>& rows) {
  return {finite_summary(rows, &EvalRow::psnr_rgb), finite_summary(rows, &EvalRow::psnr_luma),
          finite_summary(rows, &EvalRow::ssim), finite_summary(rows, &EvalRow::plausibility),
          finite_summary(rows, &EvalRow::nmd_score)};
}

EvalReport evaluate_set(const std::string& method, const std::string& dataset, const std::vector<EvalItem>& items,
                        const ResamplerSpec& spec, const Nmd* nmd, const EvalOptions& options) {
  if (items.empty()) throw ValueError("evaluate_set: empty image set for " + method);
  EvalReport report{method, dataset, {}, {}};
  for (const EvalItem& it : items) {
    EvalRow row;
    row.image = it.name;
    row.psnr_rgb = psnr(it.sr, it.hr, {PsnrDomain::kRgb, 1.0, options.shave});
    row.psnr_luma = psnr(it.sr, it.hr, {PsnrDomain::kLuma, 1.0, options.shave});
    row.ssim = ssim(it.sr, it.hr, {.shave = options.shave});
    row.plausibility = it.lr ? plausibility(it.sr, *it.lr, spec) : kNaN;
    row.nmd_score = nmd ? nmd_score(*nmd, it.sr) : kNaN;
    report.rows.push_back(row);
  }
  report.aggregate = aggregate_rows(report.rows);
  return report;
}

std::string EvalReport::csv() const {
  std::string out = "method,dataset,image,psnr_rgb,psnr_luma,ssim,plausibility,nmd_score\n";
  auto line = [&](const std::string& image, double a, double b, double c, double d, double e) {
    out += fmt::format("{},{},{},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g}\n", method, dataset, image, a, b, c, d, e);
  };
  for (const EvalRow& r : rows) line(r.image, r.psnr_rgb, r.psnr_luma, r.ssim, r.plausibility, r.nmd_score);
  const EvalAggregate& g = aggregate;
  line("mean", g.psnr_rgb.mean, g.psnr_luma.mean, g.ssim.mean, g.plausibility.mean, g.nmd_score.mean);
  line("std", g.psnr_rgb.stddev, g.psnr_luma.stddev, g.ssim.stddev, g.plausibility.stddev, g.nmd_score.stddev);
  return out;
}

std::string EvalReport::text() const {
  std::string out = fmt::format("{} on {} ({} images)\n", method, dataset, rows.size());
  out += fmt::format("{:<24} {:>10} {:>10} {:>8} {:>12} {:>9}\n", "image", "PSNR", "PSNR-Y", "SSIM", "plaus. dB",
                     "NMD");
  for (const EvalRow& r : rows) {
    out += fmt::format("{:<24} {:>10.3f} {:>10.3f} {:>8.4f} {:>12.3f} {:>9.4f}\n", r.image, r.psnr_rgb, r.psnr_luma,
                       r.ssim, r.plausibility, r.nmd_score);
  }
  const EvalAggregate& g = aggregate;
  out += fmt::format("PSNR {} dB | PSNR-Y {} dB | SSIM {} | plausibility {} dB | NMD {}\n", pm(g.psnr_rgb, 3),
                     pm(g.psnr_luma, 3), pm(g.ssim, 4), pm(g.plausibility, 3), pm(g.nmd_score, 4));
  return out;
}

NmdReport nmd_report(const Nmd& nmd, const std::vector<NamedSet>& sets) {
  NmdReport report;
  for (const NamedSet& s : sets) {
    if (s.images.empty()) throw ValueError("nmd_report: set '" + s.method + "' is empty");
    std::vector<double> scores;
    for (const Tensor& img : s.images) scores.push_back(nmd_score(nmd, img));
    report.rows.push_back({s.method, summarize(scores)});
  }
  return report;
}

std::string NmdReport::csv() const {
  std::string out = "method,mean,std,count\n";
  for (const NmdReportRow& r : rows)
    out += fmt::format("{},{:.10g},{:.10g},{}\n", r.method, r.score.mean, r.score.stddev, r.score.count);
  return out;
}

std::string NmdReport::text() const {
  std::string out = fmt::format("{:<20} {:>18} {:>6}\n", "method", "NMD score", "n");
  for (const NmdReportRow& r : rows) out += fmt::format("{:<20} {:>18} {:>6}\n", r.method, pm(r.score, 3), r.score.count);
  return out;
}

}  // namespace natsr
