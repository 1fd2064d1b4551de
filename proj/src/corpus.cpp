// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcsc/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <map>
#include <thread>

#include "lcsc/error.hpp"
#include "lcsc/lcs.hpp"
#include "lcsc/png_io.hpp"
#include "lcsc/tensor_store.hpp"

namespace lcsc {
namespace {

constexpr std::string_view kAnnotationSuffix = ".annotation.json";

struct RawSample {
  AnnotationDoc doc;
  LabelImage labels;
  CaptionTable captions;
  std::filesystem::path dir;
};

RawSample load_raw(const std::filesystem::path& annotation_path) {
  RawSample raw;
  raw.doc = load_annotation(annotation_path);
  raw.dir = annotation_path.parent_path();
  if (raw.doc.label_image.empty()) {
    throw Error(ErrorCode::kParseError, annotation_path.string() + " names no label_image");
  }
  raw.labels = read_label_png(raw.dir / raw.doc.label_image);
  if (!raw.doc.captions.empty()) raw.captions = load_caption_table(raw.dir / raw.doc.captions);
  return raw;
}

bool usable_file_stem(const std::string& id) {
  return !id.empty() && id != "." && id != ".." && id.find_first_of("/\\") == std::string::npos &&
         id.find('\0') == std::string::npos;
}

}  // namespace

std::vector<std::filesystem::path> discover_samples(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> out;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(root, ec)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() > kAnnotationSuffix.size() &&
        name.compare(name.size() - kAnnotationSuffix.size(), kAnnotationSuffix.size(), kAnnotationSuffix) == 0) {
      out.push_back(entry.path());
    }
  }
  if (ec) throw Error(ErrorCode::kIoFailure, "cannot list " + root.string() + ": " + ec.message());
  std::sort(out.begin(), out.end());
  return out;
}

LoadedSample load_sample(const std::filesystem::path& annotation_path, int max_instances) {
  RawSample raw = load_raw(annotation_path);
  if (raw.doc.image.empty()) throw Error(ErrorCode::kParseError, annotation_path.string() + " names no image");
  LoadedSample sample;
  sample.instructions = ingest_panoptic(raw.doc, raw.labels, raw.captions, max_instances);
  sample.image = read_rgb_png(raw.dir / raw.doc.image);
  return sample;
}

std::unique_ptr<EmbeddingProvider> make_provider(const PipelineConfig& config) {
  if (config.embeddings.kind == "file") {
    return FileEmbeddingStore::open(config.embeddings.path, config.channels, config.grid);
  }
  return std::make_unique<StubProvider>(config.channels, config.grid, config.embeddings.seed);
}

CompileSummary run_compile(const JobSpec& job, const PipelineConfig& config, std::ostream& log) {
  const auto started = std::chrono::steady_clock::now();
  const std::vector<std::filesystem::path> inputs = discover_samples(job.input_root);
  std::filesystem::create_directories(job.output_root);
  const std::unique_ptr<EmbeddingProvider> provider = make_provider(config);
  const std::uint64_t seed = job.seed.value_or(config.seed);

  struct Result {
    std::filesystem::path output;
    std::optional<std::string> error;
  };
  std::vector<Result> results(inputs.size());

  // Two inputs claiming one source id would race on one output path, so both
  // are rejected before any work starts.
  std::map<std::string, std::vector<std::size_t>> claims;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    try {
      const std::string id = load_annotation(inputs[i]).source_id;
      if (!usable_file_stem(id)) throw Error(ErrorCode::kParseError, "source_id '" + id + "' is not a usable file name");
      claims[id].push_back(i);
    } catch (const std::exception& e) {
      results[i].error = e.what();
    }
  }
  for (const auto& [id, owners] : claims) {
    if (owners.size() < 2) continue;
    for (std::size_t i : owners) results[i].error = "duplicate source_id '" + id + "'";
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < inputs.size(); i = next.fetch_add(1)) {
      Result& r = results[i];
      if (r.error) continue;
      try {
        const LoadedSample loaded = load_sample(inputs[i], config.max_instances);
        const CompiledSample sample = compile_sample(loaded.instructions, loaded.image, *provider, config, job.step, seed);
        r.output = job.output_root / (sample.source_id + ".lcsc");
        write_sample(sample, r.output);
      } catch (const std::exception& e) {
        r.error = e.what();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(job.jobs, static_cast<int>(inputs.size())));
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }

  CompileSummary summary;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].error) {
      ++summary.failed;
      summary.failures.push_back({inputs[i].filename().string(), *results[i].error});
      log << "failed " << inputs[i].filename().string() << ": " << *results[i].error << '\n';
    } else {
      ++summary.ok;
      summary.outputs.push_back(results[i].output);
    }
  }
  summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  summary.samples_per_second = summary.wall_seconds > 0 ? summary.ok / summary.wall_seconds : 0.0;
  return summary;
}

std::vector<ValidationReport> run_validate(const std::filesystem::path& input_root, const PipelineConfig& config) {
  std::vector<ValidationReport> reports;
  for (const auto& path : discover_samples(input_root)) {
    ValidationReport report;
    report.sample = path.filename().string();
    try {
      RawSample raw = load_raw(path);
      const InstructionSet set = ingest_panoptic_unchecked(raw.doc, raw.labels, raw.captions);
      report.violations = validate(set, config.max_instances);
      const Bucket& bucket = assign_bucket(set.image_width(), set.image_height(), config.buckets);
      for (Violation& w : latent_warnings(set, bucket.target_width / config.latent_divisor,
                                          bucket.target_height / config.latent_divisor)) {
        report.violations.push_back(std::move(w));
      }
    } catch (const std::exception& e) {
      report.load_error = e.what();
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

}  // namespace lcsc
