#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "wgeo/geoflow.hpp"

namespace wgeo::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,  // bad flags or config
  kBadCheckpoint = 3,
  kDataError = 4,  // unreadable or malformed input data, failed writes
  kTrainingAborted = 5,
};

enum class Direction { ab, ba };
Direction parse_direction(const std::string& s);  // ArgumentError unless "ab" or "ba"

/// Flags shared by every subcommand; unset values fall back to the config or checkpoint.
struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<bool> deterministic;
  std::optional<double> max_seconds;  // train only
};

/// Streams the commands talk to; std::cout / std::cerr by default.
struct Io {
  std::ostream& out;
  std::ostream& err;
};
Io default_io();

/// Writes out_path (checkpoint) and out_path with ".history.csv" appended.
int cmd_train(const fs::path& config_path, const fs::path& out_path, const GlobalOptions& opts,
              Io io = default_io());

/// Prints w_ab, w_ba and their gap with the composed fields on fresh samples.
int cmd_distance(const fs::path& ckpt, std::size_t n_samples, const GlobalOptions& opts,
                 Io io = default_io());

inline constexpr std::uint64_t kGeodesicStream = 7;

/// One CSV per t = k / (n_steps - 1), named geo_{ab|ba}_t{k}.csv. Starting
/// points come from `input` when given, otherwise from the checkpoint's
/// measure drawn with make_rng(seed, kGeodesicStream).
int cmd_geodesic(const fs::path& ckpt, std::size_t n_samples, std::size_t n_steps,
                 Direction direction, const fs::path& out_dir, const GlobalOptions& opts,
                 const std::optional<fs::path>& input = std::nullopt, Io io = default_io());

/// Rows x -> x + F(x) (ab) or x + G(x) (ba).
int cmd_map(const fs::path& ckpt, const fs::path& input_csv, Direction direction,
            const fs::path& out_csv, Io io = default_io());

/// Maps every pixel colour of a PPM image and writes the recoloured image.
int cmd_transfer(const fs::path& ckpt, const fs::path& image, Direction direction,
                 const fs::path& out_ppm, Io io = default_io());

struct EvalOptions {
  enum class Oracle { gaussian, discrete } oracle = Oracle::gaussian;
  std::size_t n_samples = 4096;  // gaussian mode
  std::size_t n_points = 64;     // discrete mode
};

/// Compares a trained checkpoint against the closed-form Gaussian map or the
/// exact discrete assignment between fresh samples of its two measures.
int cmd_eval(const fs::path& ckpt, const EvalOptions& eval, const GlobalOptions& opts,
             Io io = default_io());

/// Exact assignment between two CSV clouds; prints the mean cost and writes
/// "i,j" rows to out_csv.
int cmd_oracle_ot(const fs::path& a_csv, const fs::path& b_csv, double alpha, double beta,
                  const fs::path& out_csv, Io io = default_io());

/// 512x512 scatter of the first two columns of a CSV (white background, one
/// black pixel per point, axes fitted to the data).
int cmd_plot_scatter(const fs::path& csv, const fs::path& out_ppm, Io io = default_io());

/// Full command line: `wgeo <subcommand> ...`.
int run(int argc, char** argv);

}  // namespace wgeo::cli
