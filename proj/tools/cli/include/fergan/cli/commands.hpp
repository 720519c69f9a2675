#pragma once

#include <atomic>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fergan/cli/pipeline_config.hpp"
#include "fergan/data/dataset.hpp"
#include "fergan/gan/procedural_face.hpp"

namespace fergan::cli {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2, kExitPartial = 3 };

struct Context {
  std::ostream& out;
  /// Set asynchronously (SIGINT) to stop a sweep after the current epoch.
  const std::atomic<bool>* cancel = nullptr;
};

/// Each command validates what it needs before writing anything, embeds the
/// resolved config as config.json in its output directory, and returns the
/// main artifact.
std::filesystem::path train_translator_command(const PipelineConfig& config, Context& ctx);
std::filesystem::path generate_command(const PipelineConfig& config, Context& ctx);
std::filesystem::path assemble_command(const PipelineConfig& config, Context& ctx);
std::filesystem::path train_fer_command(const PipelineConfig& config, Context& ctx);
std::filesystem::path evaluate_command(const PipelineConfig& config, Context& ctx);
/// kExitOk when every row completed, kExitPartial otherwise.
int sweep_command(const PipelineConfig& config, Context& ctx);
/// Re-renders a sweep directory from its rows.json.
std::filesystem::path report_command(const std::filesystem::path& sweep_dir, const std::vector<std::string>& heldout_tags,
                                     double forgetting_margin, Context& ctx);

struct ToyCorpusOptions {
  std::size_t identities = 120;
  std::size_t image_size = 64;
  gan::FaceStyle style = gan::FaceStyle::kStudio;
  std::uint64_t seed = 0;
  std::string id_prefix = "toy";
  std::string source_db = "toy";
};
/// Renders a procedural corpus to dir/images plus dir/manifest.csv.
std::filesystem::path toy_corpus_command(const ToyCorpusOptions& options, const std::filesystem::path& dir,
                                         Context& ctx);

/// Loads a manifest through the preprocessing cache of `config`.
data::FaceDataset load_manifest(const PipelineConfig& config, const std::filesystem::path& manifest, bool generated);

/// Parses argv-style arguments (args[0] is the program name), runs one
/// subcommand, and maps failures to exit codes.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::atomic<bool>* cancel = nullptr);

}  // namespace fergan::cli
