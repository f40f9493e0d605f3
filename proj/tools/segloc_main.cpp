// Command-line front end: build maps from traverses, localize one map
// against another, evaluate traverse pairs, and synthesize benchmark scenes.
// Exit codes: 0 success, 1 I/O or config error, 2 localization rejected.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <segloc/association.hpp>
#include <segloc/dataset.hpp>
#include <segloc/errors.hpp>
#include <segloc/localization.hpp>
#include <segloc/mapping.hpp>
#include <segloc/mask_pipeline.hpp>
#include <segloc/synthetic.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace segloc;

namespace {

// ---------------------------------------------------------------------------
// Layered configuration: defaults -> JSON config file -> command-line flags.
// The effective configuration is echoed into every artifact for provenance.

struct ToolConfig {
  AssociationConfig association;
  MergeConfig merge;
  MaskFilterConfig mask_filter;
  SyntheticSceneConfig scene;
  double eval_offset_translation_m = 10.0;
  double eval_offset_rotation_rad = 3.141592653589793;
  std::uint64_t seed = 0;
};

void require_keys(const json& section, const char* name,
                  std::initializer_list<const char*> known) {
  for (const auto& [key, value] : section.items()) {
    (void)value;
    bool found = false;
    for (const char* k : known) {
      if (key == k) {
        found = true;
        break;
      }
    }
    if (!found) {
      throw std::invalid_argument("unknown key '" + key + "' in config section '" +
                                  name + "'");
    }
  }
}

template <typename T>
void fetch(const json& section, const char* key, T& out) {
  if (section.contains(key)) {
    out = section.at(key).get<T>();
  }
}

void apply_config_file(const fs::path& path, ToolConfig& config) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config file: " + path.string());
  }
  json root = json::parse(in);
  require_keys(root, "<top level>",
               {"seed", "association", "merge", "mask_filter", "scene", "eval"});
  fetch(root, "seed", config.seed);
  // The top-level seed drives every randomized step, including scene
  // generation; an explicit scene.seed below still overrides it.
  fetch(root, "seed", config.scene.seed);
  if (root.contains("association")) {
    const json& s = root.at("association");
    require_keys(s, "association",
                 {"epsilon_m", "size_gate_ratio", "min_inliers",
                  "allow_same_frame", "residual_ceiling_factor"});
    fetch(s, "epsilon_m", config.association.epsilon_m);
    fetch(s, "size_gate_ratio", config.association.size_gate_ratio);
    fetch(s, "min_inliers", config.association.min_inliers);
    fetch(s, "allow_same_frame", config.association.allow_same_frame);
    fetch(s, "residual_ceiling_factor",
          config.association.residual_ceiling_factor);
  }
  if (root.contains("merge")) {
    const json& s = root.at("merge");
    require_keys(s, "merge", {"cluster_radius_m", "min_observations"});
    fetch(s, "cluster_radius_m", config.merge.cluster_radius_m);
    fetch(s, "min_observations", config.merge.min_observations);
  }
  if (root.contains("mask_filter")) {
    const json& s = root.at("mask_filter");
    require_keys(s, "mask_filter", {"s_min_m", "s_max_m", "tau_elong"});
    fetch(s, "s_min_m", config.mask_filter.s_min_m);
    fetch(s, "s_max_m", config.mask_filter.s_max_m);
    fetch(s, "tau_elong", config.mask_filter.tau_elong);
  }
  if (root.contains("scene")) {
    const json& s = root.at("scene");
    require_keys(s, "scene",
                 {"boulder_count", "area_m", "elevation_range_m",
                  "shared_fraction", "position_noise_m",
                  "outlier_landmarks_per_map", "seed", "min_separation_m",
                  "size_min_m", "size_max_m", "offset_translation_m",
                  "offset_rotation_rad", "path_frames", "sensing_radius_m"});
    fetch(s, "boulder_count", config.scene.boulder_count);
    fetch(s, "area_m", config.scene.area_m);
    fetch(s, "elevation_range_m", config.scene.elevation_range_m);
    fetch(s, "shared_fraction", config.scene.shared_fraction);
    fetch(s, "position_noise_m", config.scene.position_noise_m);
    fetch(s, "outlier_landmarks_per_map",
          config.scene.outlier_landmarks_per_map);
    fetch(s, "seed", config.scene.seed);
    fetch(s, "min_separation_m", config.scene.min_separation_m);
    fetch(s, "size_min_m", config.scene.size_min_m);
    fetch(s, "size_max_m", config.scene.size_max_m);
    fetch(s, "offset_translation_m", config.scene.offset_translation_m);
    fetch(s, "offset_rotation_rad", config.scene.offset_rotation_rad);
    fetch(s, "path_frames", config.scene.path_frames);
    fetch(s, "sensing_radius_m", config.scene.sensing_radius_m);
  }
  if (root.contains("eval")) {
    const json& s = root.at("eval");
    require_keys(s, "eval", {"offset_translation_m", "offset_rotation_rad"});
    fetch(s, "offset_translation_m", config.eval_offset_translation_m);
    fetch(s, "offset_rotation_rad", config.eval_offset_rotation_rad);
  }
}

json echo_config(const ToolConfig& c) {
  return json{
      {"seed", c.seed},
      {"association",
       {{"epsilon_m", c.association.epsilon_m},
        {"size_gate_ratio", c.association.size_gate_ratio},
        {"min_inliers", c.association.min_inliers},
        {"allow_same_frame", c.association.allow_same_frame},
        {"residual_ceiling_factor", c.association.residual_ceiling_factor}}},
      {"merge",
       {{"cluster_radius_m", c.merge.cluster_radius_m},
        {"min_observations", c.merge.min_observations}}},
      {"mask_filter",
       {{"s_min_m", c.mask_filter.s_min_m},
        {"s_max_m", c.mask_filter.s_max_m},
        {"tau_elong", c.mask_filter.tau_elong}}},
      {"scene",
       {{"boulder_count", c.scene.boulder_count},
        {"area_m", c.scene.area_m},
        {"elevation_range_m", c.scene.elevation_range_m},
        {"shared_fraction", c.scene.shared_fraction},
        {"position_noise_m", c.scene.position_noise_m},
        {"outlier_landmarks_per_map", c.scene.outlier_landmarks_per_map},
        {"seed", c.scene.seed},
        {"min_separation_m", c.scene.min_separation_m},
        {"size_min_m", c.scene.size_min_m},
        {"size_max_m", c.scene.size_max_m},
        {"offset_translation_m", c.scene.offset_translation_m},
        {"offset_rotation_rad", c.scene.offset_rotation_rad},
        {"path_frames", c.scene.path_frames},
        {"sensing_radius_m", c.scene.sensing_radius_m}}},
      {"eval",
       {{"offset_translation_m", c.eval_offset_translation_m},
        {"offset_rotation_rad", c.eval_offset_rotation_rad}}}};
}

// Flag values; only flags the user actually passed override the config file.
struct Overrides {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon_m;
  std::optional<int> min_inliers;
  std::optional<double> size_gate_ratio;
  std::optional<double> cluster_radius_m;
  std::optional<int> min_observations;
  std::optional<int> boulders;
  std::optional<double> shared_fraction;
  std::optional<double> noise_m;
  std::optional<int> outliers;
  std::optional<double> area_m;
  std::optional<int> path_frames;
};

ToolConfig resolve_config(const Overrides& o) {
  ToolConfig config;
  if (o.config_path) {
    apply_config_file(*o.config_path, config);
  }
  if (o.seed) {
    config.seed = *o.seed;
    config.scene.seed = *o.seed;
  }
  if (o.epsilon_m) config.association.epsilon_m = *o.epsilon_m;
  if (o.min_inliers) config.association.min_inliers = *o.min_inliers;
  if (o.size_gate_ratio) config.association.size_gate_ratio = *o.size_gate_ratio;
  if (o.cluster_radius_m) config.merge.cluster_radius_m = *o.cluster_radius_m;
  if (o.min_observations) config.merge.min_observations = *o.min_observations;
  if (o.boulders) config.scene.boulder_count = *o.boulders;
  if (o.shared_fraction) config.scene.shared_fraction = *o.shared_fraction;
  if (o.noise_m) config.scene.position_noise_m = *o.noise_m;
  if (o.outliers) config.scene.outlier_landmarks_per_map = *o.outliers;
  if (o.area_m) config.scene.area_m = *o.area_m;
  if (o.path_frames) config.scene.path_frames = *o.path_frames;
  return config;
}

// ---------------------------------------------------------------------------
// Shared output helpers.

json matrix_json(const RigidTransform& t) {
  const Eigen::Matrix4d m = t.matrix();
  json rows = json::array();
  for (int r = 0; r < 4; ++r) {
    json row = json::array();
    for (int c = 0; c < 4; ++c) {
      row.push_back(m(r, c));
    }
    rows.push_back(row);
  }
  return rows;
}

void print_matrix(const RigidTransform& t) {
  const Eigen::Matrix4d m = t.matrix();
  for (int r = 0; r < 4; ++r) {
    std::printf("%14.9f %14.9f %14.9f %14.9f\n", m(r, 0), m(r, 1), m(r, 2),
                m(r, 3));
  }
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open for writing: " + path.string());
  }
  out << content;
  if (!out) {
    throw IoError("failed writing: " + path.string());
  }
}

std::string format2(double v) {
  char buffer[48];
  std::snprintf(buffer, sizeof(buffer), "%.2f", v);
  return buffer;
}

// Top-down scatter of both maps in the reference frame with inlier links.
void write_svg_plot(const ObjectMap& vehicle, const ObjectMap& reference,
                    const LocalizationResult& result, const fs::path& path) {
  std::vector<std::pair<Point3, double>> moved;
  for (const Landmark& lm : vehicle.landmarks) {
    moved.emplace_back(result.transform.apply(lm.position), lm.size_m);
  }
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  auto widen = [&](const Point3& p) {
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  };
  for (const auto& [p, s] : moved) widen(p);
  for (const Landmark& lm : reference.landmarks) widen(lm.position);
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-6});
  const double margin = 0.05 * span;
  const double scale = 760.0 / (span + 2.0 * margin);
  auto sx = [&](double x) { return (x - xmin + margin) * scale + 20.0; };
  auto sy = [&](double y) { return (ymax - y + margin) * scale + 20.0; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" "
         "height=\"800\" viewBox=\"0 0 800 800\">\n";
  svg += "<rect width=\"800\" height=\"800\" fill=\"#ffffff\"/>\n";
  for (const Correspondence& c : result.inliers) {
    const Point3 a = result.transform.apply(c.source);
    svg += "<line x1=\"" + format2(sx(a.x())) + "\" y1=\"" +
           format2(sy(a.y())) + "\" x2=\"" + format2(sx(c.target.x())) +
           "\" y2=\"" + format2(sy(c.target.y())) +
           "\" stroke=\"#2ca02c\" stroke-width=\"1\"/>\n";
  }
  for (const Landmark& lm : reference.landmarks) {
    svg += "<circle cx=\"" + format2(sx(lm.position.x())) + "\" cy=\"" +
           format2(sy(lm.position.y())) + "\" r=\"" +
           format2(std::max(2.0, 0.5 * lm.size_m * scale)) +
           "\" fill=\"none\" stroke=\"#d95f02\" stroke-width=\"1.5\"/>\n";
  }
  for (const auto& [p, s] : moved) {
    svg += "<circle cx=\"" + format2(sx(p.x())) + "\" cy=\"" +
           format2(sy(p.y())) + "\" r=\"" +
           format2(std::max(1.5, 0.35 * s * scale)) +
           "\" fill=\"#1f77b4\" fill-opacity=\"0.7\"/>\n";
  }
  svg += "</svg>\n";
  write_text(path, svg);
}

// ---------------------------------------------------------------------------
// Subcommands.

int run_build_map(const std::string& traverse_path, const std::string& out,
                  const std::optional<std::string>& mapping_path,
                  const ToolConfig& config) {
  validate(config.merge);
  validate(config.mask_filter);
  ColumnMapping mapping;
  if (mapping_path) {
    mapping = ColumnMapping::load(*mapping_path);
  }
  std::vector<std::string> warnings;
  const Traverse traverse = load_traverse(traverse_path, mapping, &warnings);
  for (const std::string& w : warnings) {
    std::cerr << "warning: " << traverse_path << ": " << w << "\n";
  }

  // Physical-size gate, mirroring the mask filter bounds at the point where
  // only sizes (not pixel masks) are available.
  Traverse kept = traverse;
  std::size_t dropped = 0;
  for (TraverseRecord& record : kept) {
    const std::size_t before = record.detections.size();
    std::erase_if(record.detections, [&](const RoverFrameDetection& d) {
      return d.size_m < config.mask_filter.s_min_m ||
             d.size_m > config.mask_filter.s_max_m;
    });
    dropped += before - record.detections.size();
  }

  const ObjectMap merged =
      merge_duplicates(accumulate_traverse(kept, "map"), config.merge);
  save_map(merged, out);

  json summary;
  summary["out"] = out;
  summary["frames"] = traverse.size();
  summary["detections_dropped_by_size"] = dropped;
  summary["landmarks"] = merged.landmarks.size();
  if (merged.landmarks.empty()) {
    std::cerr << "warning: map is empty\n";
    summary["bounds"] = nullptr;
  } else {
    const Aabb bounds = map_bounds(merged);
    summary["bounds"] = {
        {"min", {bounds.min.x(), bounds.min.y(), bounds.min.z()}},
        {"max", {bounds.max.x(), bounds.max.y(), bounds.max.z()}}};
  }
  summary["config"] = echo_config(config);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int run_localize(const std::string& map_a_path, const std::string& map_b_path,
                 const std::optional<std::string>& out,
                 const std::optional<std::string>& plot,
                 const std::optional<std::string>& dump_affinity,
                 const ToolConfig& config) {
  validate(config.association);
  const ObjectMap vehicle = load_map(map_a_path, "vehicle");
  const ObjectMap reference = load_map(map_b_path, "reference");

  if (dump_affinity) {
    const ConsistencyGraph graph = build_affinity(
        generate_candidates(vehicle, reference, config.association), vehicle,
        reference, config.association);
    std::string csv = "i,j\n";
    for (int i = 0; i < graph.affinity.size(); ++i) {
      for (int j = i + 1; j < graph.affinity.size(); ++j) {
        if (graph.affinity.test(i, j)) {
          csv += std::to_string(i) + "," + std::to_string(j) + "\n";
        }
      }
    }
    write_text(*dump_affinity, csv);
  }

  const LocalizationResult result =
      localize(vehicle, reference, config.association);

  print_matrix(result.transform);

  json out_json;
  out_json["transform"] = matrix_json(result.transform);
  out_json["candidate_count"] = result.candidate_count;
  out_json["inlier_count"] = result.inlier_count;
  out_json["density"] = result.density;
  out_json["residual_rms_m"] = result.residual_rms_m;
  out_json["residual_suspect"] = result.residual_suspect;
  json inliers = json::array();
  for (const Correspondence& c : result.inliers) {
    inliers.push_back({{"vehicle", {c.source.x(), c.source.y(), c.source.z()}},
                       {"reference",
                        {c.target.x(), c.target.y(), c.target.z()}}});
  }
  out_json["inliers"] = inliers;
  out_json["config"] = echo_config(config);

  if (out) {
    write_text(*out, out_json.dump(2) + "\n");
  } else {
    std::cout << out_json.dump(2) << "\n";
  }
  if (plot) {
    write_svg_plot(vehicle, reference, result, *plot);
  }
  return 0;
}

std::vector<std::pair<std::string, std::string>> parse_pairs(
    const std::string& text) {
  std::vector<std::pair<std::string, std::string>> pairs;
  if (text.empty()) {
    return pairs;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string token =
        text.substr(start, comma == std::string::npos ? std::string::npos
                                                      : comma - start);
    const std::size_t colon = token.find(':');
    if (colon == std::string::npos || colon == 0 ||
        colon == token.size() - 1) {
      throw std::invalid_argument("pair '" + token +
                                  "' is not of the form <id>:<id>");
    }
    pairs.emplace_back(token.substr(0, colon), token.substr(colon + 1));
    if (comma == std::string::npos) {
      break;
    }
    start = comma + 1;
  }
  return pairs;
}

int run_eval(const std::string& data_root, const std::string& pairs_text,
             const std::string& out, const ToolConfig& config) {
  const auto pairs = parse_pairs(pairs_text);
  EvaluationConfig eval;
  eval.association = config.association;
  eval.merge = config.merge;
  eval.seed = config.seed;
  eval.offset_translation_m = config.eval_offset_translation_m;
  eval.offset_rotation_rad = config.eval_offset_rotation_rad;

  std::vector<EvaluationRow> rows;
  rows.reserve(pairs.size());
  for (const auto& [id_a, id_b] : pairs) {
    rows.push_back(evaluate_pair(id_a, id_b, data_root, eval));
  }

  write_text(out, evaluation_report_csv(rows));
  std::cout << evaluation_report_table(rows);
  std::cout << "report: " << out << "\n";
  std::cout << "config: " << echo_config(config).dump() << "\n";
  return 0;
}

int run_synth(const std::string& out_dir, const ToolConfig& config) {
  validate(config.scene);
  fs::create_directories(out_dir);
  const SyntheticTraverses synth = synthesize_traverses(config.scene);
  const fs::path dir(out_dir);
  save_traverse(synth.traverse_a, dir / "traverse_a.csv");
  save_traverse(synth.traverse_b, dir / "traverse_b.csv");

  json truth;
  truth["matrix"] = matrix_json(synth.ground_truth);
  truth["config"] = echo_config(config);
  write_text(dir / "ground_truth.json", truth.dump(2) + "\n");

  std::string labels = "ax,ay,az,bx,by,bz\n";
  char buffer[160];
  for (const auto& [pa, pb] : synth.shared_positions) {
    std::snprintf(buffer, sizeof(buffer),
                  "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", pa.x(), pa.y(), pa.z(),
                  pb.x(), pb.y(), pb.z());
    labels += buffer;
  }
  write_text(dir / "labels.csv", labels);

  json summary;
  summary["out"] = out_dir;
  summary["files"] = {"traverse_a.csv", "traverse_b.csv", "ground_truth.json",
                      "labels.csv"};
  summary["shared_count"] = synth.shared_positions.size();
  summary["frames"] = synth.traverse_a.size();
  summary["config"] = echo_config(config);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Segment-based global localization between object maps"};
  app.set_version_flag("--version", "segloc 0.1.0");
  app.require_subcommand(1);

  Overrides o;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config_path,
                    "JSON config file (defaults -> file -> flags)");
    cmd->add_option("--seed", o.seed, "Seed for all randomized steps");
  };

  std::string traverse_path, out_path, map_a_path, map_b_path;
  std::string data_root, pairs_text;
  std::string eval_out = "eval_report.csv";
  std::optional<std::string> mapping_path, result_out, plot_path, affinity_out;

  CLI::App* build = app.add_subcommand(
      "build-map", "Replay a traverse into a merged landmark map CSV");
  build->add_option("traverse", traverse_path, "Input traverse CSV")
      ->required();
  build->add_option("--out", out_path, "Output map CSV")->required();
  build->add_option("--mapping", mapping_path,
                    "Column-mapping file for foreign traverse schemas");
  build->add_option("--cluster-radius", o.cluster_radius_m,
                    "Merge cluster radius in meters");
  build->add_option("--min-observations", o.min_observations,
                    "Minimum observations for a landmark to survive merging");
  add_common(build);

  CLI::App* loc = app.add_subcommand(
      "localize", "Align a vehicle map against a reference map");
  loc->add_option("map_vehicle", map_a_path, "Vehicle map CSV")->required();
  loc->add_option("map_reference", map_b_path, "Reference map CSV")
      ->required();
  loc->add_option("--out", result_out, "Write the result JSON here");
  loc->add_option("--plot", plot_path, "Write an SVG overlay plot here");
  loc->add_option("--dump-affinity", affinity_out,
                  "Write the consistency-graph edge list CSV here");
  loc->add_option("--epsilon", o.epsilon_m,
                  "Distance-consistency tolerance in meters");
  loc->add_option("--min-inliers", o.min_inliers,
                  "Minimum inlier count to accept a transform");
  loc->add_option("--size-gate", o.size_gate_ratio,
                  "Max landmark size ratio for candidate pairs (0 = off)");
  add_common(loc);

  CLI::App* eval = app.add_subcommand(
      "eval", "Evaluate traverse pairs from a data directory");
  eval->add_option("data_root", data_root, "Directory with traverse_<id>.csv")
      ->required();
  eval->add_option("--pairs", pairs_text,
                   "Comma-separated id pairs, e.g. 3:5,3:7,5:7");
  eval->add_option("--out", eval_out, "Report CSV path");
  eval->add_option("--epsilon", o.epsilon_m,
                   "Distance-consistency tolerance in meters");
  eval->add_option("--min-inliers", o.min_inliers,
                   "Minimum inlier count to accept a transform");
  eval->add_option("--cluster-radius", o.cluster_radius_m,
                   "Merge cluster radius in meters");
  eval->add_option("--min-observations", o.min_observations,
                   "Minimum observations for a landmark to survive merging");
  add_common(eval);

  CLI::App* synth = app.add_subcommand(
      "synth", "Generate a synthetic two-session benchmark scene");
  synth->add_option("--out", out_path, "Output directory")->required();
  synth->add_option("--boulders", o.boulders, "Number of boulders");
  synth->add_option("--shared", o.shared_fraction,
                    "Fraction of boulders visible in both sessions");
  synth->add_option("--noise", o.noise_m,
                    "Per-axis observation noise sigma in meters");
  synth->add_option("--outliers", o.outliers,
                    "Spurious landmarks per session");
  synth->add_option("--area", o.area_m, "Scene side length in meters");
  synth->add_option("--frames", o.path_frames, "Frames per traverse");
  add_common(synth);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const ToolConfig config = resolve_config(o);
    if (build->parsed()) {
      return run_build_map(traverse_path, out_path, mapping_path, config);
    }
    if (loc->parsed()) {
      return run_localize(map_a_path, map_b_path, result_out, plot_path,
                          affinity_out, config);
    }
    if (eval->parsed()) {
      return run_eval(data_root, pairs_text, eval_out, config);
    }
    if (synth->parsed()) {
      return run_synth(out_path, config);
    }
  } catch (const LocalizationRejected& e) {
    std::cerr << "localization rejected: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
