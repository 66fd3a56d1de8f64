// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "patchprop/transfer.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "patchprop/container.hpp"
#include "patchprop/io.hpp"
#include "patchprop/parallel.hpp"

namespace patchprop {

namespace {

nlohmann::json provenance_to_json(const Provenance& p) {
  return {{"training_image", p.training_image},
          {"image_width", p.image_width},
          {"image_height", p.image_height},
          {"marked_pixels", p.marked_pixels},
          {"options",
           {{"steps", p.options.steps},
            {"binarise", p.options.binarise},
            {"overwrite", p.options.overwrite},
            {"epsilon", p.options.epsilon}}}};
}

Provenance provenance_from_json(const nlohmann::json& j) {
  Provenance p;
  p.training_image = j.value("training_image", "");
  p.image_width = j.value("image_width", 0);
  p.image_height = j.value("image_height", 0);
  p.marked_pixels = j.value("marked_pixels", std::size_t{0});
  if (j.contains("options")) {
    const auto& o = j["options"];
    p.options.steps = o.value("steps", 2);
    p.options.binarise = o.value("binarise", true);
    p.options.overwrite = o.value("overwrite", true);
    p.options.epsilon = o.value("epsilon", 1e-6);
  }
  return p;
}

}  // namespace

ValueStack dictionary_probabilities(const LabelStack& labels, const TransformPair& transforms) {
  ValueStack d(transforms.dictionary_pixels(), labels.layers());
  if (labels.rows() != transforms.image_pixels()) {
    fail(ErrorCode::kShapeMismatch, "label stack rows do not match the image");
  }
  stencil_image_to_dict(*transforms.graph(), transforms.t1_weights(), labels.values(),
                        labels.layers(), d.values());
  return d;
}

TrainedModel make_model(std::shared_ptr<const KMeansTree> tree, const LabelStack& final_labels,
                        const TransformPair& transforms, Provenance provenance) {
  if (transforms.graph()->node_count() != tree->node_count() ||
      transforms.graph()->patch_size() != tree->patch_size()) {
    fail(ErrorCode::kShapeMismatch, "transforms were not built from this dictionary");
  }
  TrainedModel model;
  model.classes = static_cast<int>(final_labels.layers());
  model.dictionary_probabilities = dictionary_probabilities(final_labels, transforms);
  const auto mask = transforms.t1_zero_rows();
  model.masked.assign(mask.begin(), mask.end());
  model.tree = std::move(tree);
  model.provenance = std::move(provenance);
  return model;
}

std::vector<std::uint8_t> TrainedModel::serialize() const {
  Container c = tree->to_container();
  ByteWriter d;
  d.u32(static_cast<std::uint32_t>(classes));
  d.u64(dictionary_probabilities.rows());
  for (double v : dictionary_probabilities.values()) d.f64(v);
  c.sections["DPRB"] = std::move(d.bytes());
  c.sections["DMSK"] = masked;
  const std::string meta = provenance_to_json(provenance).dump();
  c.sections["META"] = std::vector<std::uint8_t>(meta.begin(), meta.end());
  return encode_container(c);
}

TrainedModel TrainedModel::deserialize(std::span<const std::uint8_t> bytes) {
  const Container c = decode_container(bytes);
  TrainedModel model;
  model.tree = std::make_shared<const KMeansTree>(KMeansTree::from_container(c));
  auto dprb = c.sections.find("DPRB");
  auto dmsk = c.sections.find("DMSK");
  if (dprb == c.sections.end() || dmsk == c.sections.end()) {
    fail(ErrorCode::kCorruption, "model file lacks dictionary probabilities");
  }
  ByteReader r(dprb->second);
  model.classes = static_cast<int>(r.u32());
  const std::uint64_t rows = r.u64();
  const std::size_t m = model.tree->shape().pixel_count();
  if (rows != m || model.classes < 2 || model.classes > kMaxClasses ||
      r.remaining() != m * static_cast<std::size_t>(model.classes) * 8 ||
      dmsk->second.size() != m) {
    fail(ErrorCode::kCorruption, "dictionary probability section inconsistent with dictionary");
  }
  std::vector<double> values(m * static_cast<std::size_t>(model.classes));
  for (double& v : values) v = r.f64();
  model.dictionary_probabilities =
      ValueStack(m, static_cast<std::size_t>(model.classes), std::move(values));
  model.masked = dmsk->second;
  if (auto meta = c.sections.find("META"); meta != c.sections.end()) {
    try {
      model.provenance = provenance_from_json(
          nlohmann::json::parse(meta->second.begin(), meta->second.end()));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kCorruption, std::string("bad model metadata: ") + e.what());
    }
  }
  return model;
}

void TrainedModel::save(const std::string& path) const { write_file_bytes(path, serialize()); }

TrainedModel TrainedModel::load(const std::string& path) {
  return deserialize(read_file_bytes(path));
}

ProbabilityStack apply_to_image(const PixelGrid& image, const TrainedModel& model) {
  const KMeansTree& tree = *model.tree;
  if (image.channels() != tree.channels()) {
    fail(ErrorCode::kConfig, "image has " + std::to_string(image.channels()) +
                                 " channels, model expects " + std::to_string(tree.channels()));
  }
  if (image.width() < tree.patch_size() || image.height() < tree.patch_size()) {
    fail(ErrorCode::kConfig, "image smaller than the model patch size");
  }
  const AssignmentImage assignment = assign_image(image, tree);
  auto graph = std::make_shared<const BiadjacencyGraph>(
      build_biadjacency(assignment, tree.patch_size(), tree.node_count()));
  const TransformPair transforms = normalize(graph);
  ProbabilityStack out(image.pixel_count(), model.dictionary_probabilities.layers());
  stencil_dict_to_image(*graph, transforms.t2_weights(), model.dictionary_probabilities.values(),
                        model.dictionary_probabilities.layers(), out.values());
  return out;
}

StackResult apply_to_stack(std::span<const PixelGrid> slices, const TrainedModel& model,
                           const StackOptions& options, const ProgressCallback& progress) {
  StackResult result;
  result.classes = model.classes;
  if (slices.empty()) return result;
  result.width = slices.front().width();
  result.height = slices.front().height();
  for (std::size_t z = 0; z < slices.size(); ++z) {
    const auto& s = slices[z];
    if (s.width() != result.width || s.height() != result.height ||
        s.channels() != model.tree->channels() || s.width() < model.tree->patch_size() ||
        s.height() < model.tree->patch_size()) {
      fail(ErrorCode::kConfig, "slice " + std::to_string(z) +
                                   " does not match the stack geometry or the model");
    }
  }

  result.probabilities.resize(slices.size());
  const unsigned workers = std::max(
      1u, std::min<unsigned>(options.workers ? options.workers : worker_threads(),
                             static_cast<unsigned>(slices.size())));
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  std::vector<std::exception_ptr> errors(workers);
  auto worker = [&](unsigned w) {
    try {
      for (std::size_t z = next++; z < slices.size(); z = next++) {
        result.probabilities[z] = apply_to_image(slices[z], model);
        const std::size_t finished = ++done;
        if (progress) {
          std::lock_guard lock(progress_mutex);
          progress(finished, slices.size());
        }
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker, w);
  worker(0);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  const std::size_t plane = static_cast<std::size_t>(result.width) * result.height;
  result.labels.width = result.width;
  result.labels.height = result.height;
  result.labels.depth = static_cast<int>(slices.size());
  result.labels.labels.reserve(plane * slices.size());
  for (const auto& p : result.probabilities) {
    const auto seg = segment(p, options.epsilon);
    result.labels.labels.insert(result.labels.labels.end(), seg.begin(), seg.end());
  }
  if (options.min_component > 0) {
    std::vector<int> classes = options.component_classes;
    if (classes.empty())
      for (int c = 1; c <= model.classes; ++c) classes.push_back(c);
    for (int c : classes) {
      result.labels = remove_small_components(std::move(result.labels),
                                              static_cast<std::uint8_t>(c), options.min_component);
    }
  }
  if (options.detect_centres) {
    const int cls = options.centre_class > 0 ? options.centre_class : model.classes;
    if (cls > model.classes) fail(ErrorCode::kUnknownClass, "centre class outside the model");
    for (std::size_t z = 0; z < slices.size(); ++z) {
      const auto layer = layer_of(result.probabilities[z], static_cast<std::size_t>(cls - 1));
      auto found = detect_centres(layer, result.width, result.height, options.centre_options,
                                  static_cast<int>(z));
      result.centres.insert(result.centres.end(), found.begin(), found.end());
    }
  }
  return result;
}

void write_stack_outputs(const StackResult& result, const std::string& dir, bool with_centres) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::size_t plane = static_cast<std::size_t>(result.width) * result.height;
  const std::size_t depth = result.probabilities.size();
  const auto classes = static_cast<std::size_t>(result.classes);
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<std::vector<std::uint16_t>> pages(depth, std::vector<std::uint16_t>(plane));
    for (std::size_t z = 0; z < depth; ++z)
      for (std::size_t i = 0; i < plane; ++i) pages[z][i] = quantize_u16(result.probabilities[z](i, c));
    write_tiff_stack_u16((fs::path(dir) / ("prob_class" + std::to_string(c + 1) + ".tif")).string(),
                         result.width, result.height, pages);
  }
  std::vector<std::vector<std::uint8_t>> label_pages(depth);
  for (std::size_t z = 0; z < depth; ++z) {
    label_pages[z].assign(result.labels.labels.begin() + static_cast<std::ptrdiff_t>(z * plane),
                          result.labels.labels.begin() + static_cast<std::ptrdiff_t>((z + 1) * plane));
  }
  write_tiff_stack_u8((fs::path(dir) / "labels.tif").string(), result.width, result.height,
                      label_pages);

  std::vector<double> all;
  all.reserve(depth * plane * classes);
  for (const auto& p : result.probabilities) all.insert(all.end(), p.values().begin(), p.values().end());
  const std::size_t shape[] = {depth, static_cast<std::size_t>(result.height),
                               static_cast<std::size_t>(result.width), classes};
  write_npy((fs::path(dir) / "probabilities.npy").string(), shape, all);

  if (with_centres) {
    std::ofstream csv(fs::path(dir) / "centres.csv");
    if (!csv) fail(ErrorCode::kIo, "cannot write centres.csv");
    write_centres_csv(csv, result.centres);
  }
}

}  // namespace patchprop
