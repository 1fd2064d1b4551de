// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Batch driver over an on-disk corpus. A corpus is a directory of
// `*.annotation.json` documents; each names its label PNG, RGB PNG and
// caption table relative to itself.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lcsc/embedding.hpp"
#include "lcsc/instruction.hpp"
#include "lcsc/pipeline.hpp"

namespace lcsc {

struct LoadedSample {
  InstructionSet instructions;
  RgbImage image;
};

/// Sorted list of annotation documents directly under `root`.
std::vector<std::filesystem::path> discover_samples(const std::filesystem::path& root);
LoadedSample load_sample(const std::filesystem::path& annotation_path, int max_instances = kDefaultMaxInstances);

std::unique_ptr<EmbeddingProvider> make_provider(const PipelineConfig& config);

struct JobSpec {
  std::filesystem::path input_root;
  std::filesystem::path output_root;
  std::filesystem::path config_path;
  std::optional<std::uint64_t> seed;  // overrides the config seed
  std::int64_t step = 0;
  int jobs = 1;
};

struct SampleFailure {
  std::string sample;
  std::string error;
};

struct CompileSummary {
  std::size_t ok = 0;
  std::size_t failed = 0;
  double wall_seconds = 0.0;
  double samples_per_second = 0.0;
  std::vector<std::filesystem::path> outputs;
  std::vector<SampleFailure> failures;
};

/// Compiles every sample into `<output_root>/<source_id>.lcsc`. Per-sample
/// failures are collected (and logged to `log`), never thrown. Output bytes do
/// not depend on `job.jobs`.
CompileSummary run_compile(const JobSpec& job, const PipelineConfig& config, std::ostream& log);

struct ValidationReport {
  std::string sample;
  std::vector<Violation> violations;
  std::optional<std::string> load_error;
};

/// Loads each sample without the construction-time check and reports every
/// violation, including latent-scale warnings for the sample's bucket.
std::vector<ValidationReport> run_validate(const std::filesystem::path& input_root, const PipelineConfig& config);

}  // namespace lcsc
