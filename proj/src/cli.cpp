// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcsc/cli.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lcsc/corpus.hpp"
#include "lcsc/error.hpp"
#include "lcsc/tensor_store.hpp"

namespace lcsc {
namespace {

using nlohmann::json;

const char* modality_name(Modality m) { return m == Modality::kImage ? "image" : "text"; }

std::string severity_name(Violation::Severity s) { return s == Violation::Severity::kError ? "error" : "warning"; }

json summary_json(const CompileSummary& s) {
  json failures = json::array();
  for (const auto& f : s.failures) failures.push_back({{"sample", f.sample}, {"error", f.error}});
  json outputs = json::array();
  for (const auto& p : s.outputs) outputs.push_back(p.string());
  return {{"ok", s.ok},
          {"failed", s.failed},
          {"wall_seconds", s.wall_seconds},
          {"samples_per_second", s.samples_per_second},
          {"outputs", outputs},
          {"failures", failures}};
}

int cmd_compile(const JobSpec& job, const std::string& format, std::ostream& out, std::ostream& err) {
  if (job.jobs < 1) {
    err << "error: --jobs must be >= 1\n";
    return kExitUsage;
  }
  if (!std::filesystem::is_directory(job.input_root)) {
    err << "error: input directory " << job.input_root << " does not exist\n";
    return kExitUsage;
  }
  PipelineConfig config;
  try {
    config = job.config_path.empty() ? default_config() : load_config(job.config_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  CompileSummary summary;
  try {
    summary = run_compile(job, config, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  if (format == "json") {
    out << summary_json(summary).dump(2) << '\n';
  } else {
    out << "samples ok: " << summary.ok << "\nsamples failed: " << summary.failed << "\nwall time: " << summary.wall_seconds
        << " s\nthroughput: " << summary.samples_per_second << " samples/s\n";
  }
  return summary.failed == 0 ? kExitOk : kExitFailure;
}

json inspect_json(const CompiledSample& s) {
  std::size_t nonzero = 0;
  for (int y = 0; y < s.lc.height; ++y) {
    for (int x = 0; x < s.lc.width; ++x) nonzero += s.lc.cell_is_zero(x, y) ? 0 : 1;
  }
  std::map<float, std::size_t> histogram;
  for (float w : s.weight_map.data) ++histogram[w];

  json instances = json::array();
  std::size_t images = 0;
  for (std::size_t i = 0; i < s.instance_ids.size(); ++i) {
    instances.push_back({{"id", s.instance_ids[i]}, {"modality", modality_name(s.modalities[i])}});
    images += s.modalities[i] == Modality::kImage ? 1 : 0;
  }
  json hist = json::array();
  for (const auto& [value, count] : histogram) hist.push_back({{"weight", value}, {"cells", count}});
  json crops = json::array();
  for (const auto& [id, crop] : s.reference_crops) {
    crops.push_back({{"id", id}, {"shape", {crop.height, crop.width, 3}}});
  }
  return {{"source_id", s.source_id},
          {"bucket", s.bucket.ratio_id},
          {"bucket_size", {s.bucket.target_width, s.bucket.target_height}},
          {"seed", s.seed},
          {"step", s.step},
          {"lc_shape", {s.lc.channels, s.lc.height, s.lc.width}},
          {"weight_map_shape", {s.weight_map.height, s.weight_map.width}},
          {"nonzero_cells", nonzero},
          {"total_cells", s.lc.plane()},
          {"instances", instances},
          {"image_choices", images},
          {"text_choices", s.instance_ids.size() - images},
          {"weight_histogram", hist},
          {"reference_crops", crops}};
}

int cmd_inspect(const std::filesystem::path& path, const std::string& format, std::ostream& out, std::ostream& err) {
  CompiledSample sample;
  try {
    sample = read_sample(path);
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return kExitFailure;
  }
  const json r = inspect_json(sample);
  if (format == "json") {
    out << r.dump(2) << '\n';
    return kExitOk;
  }
  out << "source_id: " << sample.source_id << '\n'
      << "bucket: " << sample.bucket.ratio_id << " (" << sample.bucket.target_width << "x" << sample.bucket.target_height
      << ")\n"
      << "seed: " << sample.seed << "  step: " << sample.step << '\n'
      << "lc: " << sample.lc.channels << "x" << sample.lc.height << "x" << sample.lc.width << '\n'
      << "weight_map: " << sample.weight_map.height << "x" << sample.weight_map.width << '\n'
      << "nonzero cells: " << r["nonzero_cells"].get<std::size_t>() << " / " << sample.lc.plane() << '\n'
      << "instances: " << sample.instance_ids.size() << " (text " << r["text_choices"].get<std::size_t>()
      << ", image " << r["image_choices"].get<std::size_t>() << ")\n";
  for (std::size_t i = 0; i < sample.instance_ids.size(); ++i) {
    out << "  " << sample.instance_ids[i] << ": " << modality_name(sample.modalities[i]) << '\n';
  }
  out << "weight histogram:\n";
  for (const auto& bin : r["weight_histogram"]) {
    out << "  " << bin["weight"].get<float>() << ": " << bin["cells"].get<std::size_t>() << '\n';
  }
  for (const auto& [id, crop] : sample.reference_crops) {
    out << "reference crop " << id << ": " << crop.height << "x" << crop.width << "x3\n";
  }
  return kExitOk;
}

int cmd_validate(const std::filesystem::path& input, const std::filesystem::path& config_path, const std::string& format,
                 std::ostream& out, std::ostream& err) {
  if (!std::filesystem::is_directory(input)) {
    err << "error: input directory " << input << " does not exist\n";
    return kExitUsage;
  }
  PipelineConfig config;
  std::vector<ValidationReport> reports;
  try {
    config = config_path.empty() ? default_config() : load_config(config_path);
    reports = run_validate(input, config);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  bool failed = false;
  json doc = json::array();
  for (const auto& r : reports) {
    json entry = {{"sample", r.sample}, {"violations", json::array()}};
    if (r.load_error) {
      entry["load_error"] = *r.load_error;
      failed = true;
    }
    for (const auto& v : r.violations) {
      entry["violations"].push_back({{"kind", to_string(v.kind)},
                                     {"severity", severity_name(v.severity)},
                                     {"instance_ids", v.instance_ids},
                                     {"message", v.message}});
      failed = failed || v.severity == Violation::Severity::kError;
    }
    doc.push_back(std::move(entry));
  }

  if (format == "json") {
    out << doc.dump(2) << '\n';
  } else {
    for (const auto& r : reports) {
      if (r.load_error) {
        out << r.sample << ": load error: " << *r.load_error << '\n';
      } else if (r.violations.empty()) {
        out << r.sample << ": ok\n";
      }
      for (const auto& v : r.violations) {
        out << r.sample << ": " << severity_name(v.severity) << " " << to_string(v.kind) << ": " << v.message << '\n';
      }
    }
  }
  return failed ? kExitFailure : kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent control signal compiler"};
  app.require_subcommand(1);

  std::string format = "text";
  const auto add_format = [&format](CLI::App* cmd) {
    cmd->add_option("--format", format, "Report format")->check(CLI::IsMember({"text", "json"}));
  };

  JobSpec job;
  std::uint64_t seed = 0;
  auto* compile = app.add_subcommand("compile", "Compile a corpus into .lcsc files");
  compile->add_option("--input", job.input_root, "Corpus directory")->required();
  compile->add_option("--output", job.output_root, "Output directory")->required();
  compile->add_option("--config", job.config_path, "Pipeline config (JSON)");
  auto* seed_opt = compile->add_option("--seed", seed, "Global seed (overrides config)");
  compile->add_option("--step", job.step, "Training step for the weight schedule");
  compile->add_option("--jobs", job.jobs, "Worker threads");
  add_format(compile);

  std::filesystem::path inspect_path;
  auto* inspect = app.add_subcommand("inspect", "Report on a compiled file");
  inspect->add_option("path", inspect_path, "Compiled .lcsc file")->required();
  add_format(inspect);

  std::filesystem::path validate_input;
  std::filesystem::path validate_config;
  auto* validate_cmd = app.add_subcommand("validate", "List instruction violations across a corpus");
  validate_cmd->add_option("--input", validate_input, "Corpus directory")->required();
  validate_cmd->add_option("--config", validate_config, "Pipeline config (JSON)");
  add_format(validate_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (compile->parsed()) {
    if (seed_opt->count() > 0) job.seed = seed;
    return cmd_compile(job, format, out, err);
  }
  if (inspect->parsed()) return cmd_inspect(inspect_path, format, out, err);
  return cmd_validate(validate_input, validate_config, format, out, err);
}

}  // namespace lcsc
