#pragma once

#include <optional>
#include <string>
#include <vector>

#include "natsr/metrics.hpp"
#include "natsr/nmd.hpp"
#include "natsr/resample.hpp"

// Report generation: FR-IQA, LR-consistency, and NMD scores per image with
// mean ± std aggregates.
namespace natsr {

// RGB PSNR between degrade(sr) and lr. Hits the sentinel when sr degrades
// exactly to lr.
double plausibility(const Tensor& sr, const Tensor& lr, const ResamplerSpec& spec);

struct EvalRow {
  std::string image;
  double psnr_rgb = 0.0;
  double psnr_luma = 0.0;
  double ssim = 0.0;
  double plausibility = 0.0;  // NaN without an LR reference
  double nmd_score = 0.0;     // NaN without an NMD
};

struct EvalAggregate {
  Summary psnr_rgb, psnr_luma, ssim, plausibility, nmd_score;
};

struct EvalReport {
  std::string method;
  std::string dataset;
  std::vector<EvalRow> rows;
  EvalAggregate aggregate;

  std::string csv() const;
  std::string text() const;
};

// Summaries over the finite entries of each column.
EvalAggregate aggregate_rows(const std::vector<EvalRow>& rows);

struct EvalItem {
  std::string name;
  Tensor sr;
  Tensor hr;
  std::optional<Tensor> lr;
};

struct EvalOptions {
  int shave = 0;  // border pixels dropped before PSNR/SSIM
};

// Throws ValueError on an empty set.
EvalReport evaluate_set(const std::string& method, const std::string& dataset, const std::vector<EvalItem>& items,
                        const ResamplerSpec& spec, const Nmd* nmd = nullptr, const EvalOptions& options = {});

struct NmdReportRow {
  std::string method;
  Summary score;
};

struct NmdReport {
  std::vector<NmdReportRow> rows;
  std::string csv() const;
  std::string text() const;
};

struct NamedSet {
  std::string method;
  std::vector<Tensor> images;
};

// Mean ± std of nmd_score per set. Throws ValueError when a set is empty.
NmdReport nmd_report(const Nmd& nmd, const std::vector<NamedSet>& sets);

}  // namespace natsr
