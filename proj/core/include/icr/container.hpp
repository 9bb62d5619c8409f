#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "icr/matrix.hpp"
#include "icr/scene.hpp"

namespace icr {

enum class DType { kF32, kI32 };

std::string_view dtype_name(DType d);

/// One named array of an ICRS container. Exactly one of f32/i32 is used.
struct ArrayEntry {
  std::string name;
  DType dtype = DType::kF32;
  std::vector<std::size_t> shape;
  std::vector<float> f32;
  std::vector<std::int32_t> i32;

  std::size_t element_count() const;
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const;  // product of trailing dims, 1 for 1-D arrays

  friend bool operator==(const ArrayEntry&, const ArrayEntry&) = default;
};

/// In-memory form of an "ICRS v1" container directory:
///
///   manifest.json   format_version, scene_id, C, labeled, attrs, arrays[]
///   <name>.bin      raw row-major little-endian payload per array
///
/// Arrays keep insertion order, which is also the manifest order on write.
class Container {
 public:
  static constexpr int kFormatVersion = 1;
  static constexpr const char* kManifestName = "manifest.json";

  std::string scene_id;
  int num_categories = 0;
  bool labeled = false;
  nlohmann::ordered_json attrs = nlohmann::ordered_json::object();

  void put(std::string name, const MatrixF& m);
  void put(std::string name, std::vector<float> values,
           std::vector<std::size_t> shape);
  void put(std::string name, std::vector<std::int32_t> values,
           std::vector<std::size_t> shape);
  void put_vector(std::string name, std::vector<float> values);
  void put_vector(std::string name, std::vector<std::int32_t> values);

  bool has(std::string_view name) const;
  void remove(std::string_view name);
  const ArrayEntry& get(std::string_view name) const;

  /// Typed accessors; throw IoError naming the array on dtype/rank misuse.
  MatrixF matrix_f32(std::string_view name) const;
  std::vector<float> vector_f32(std::string_view name) const;
  std::vector<std::int32_t> vector_i32(std::string_view name) const;

  const std::vector<ArrayEntry>& arrays() const noexcept { return arrays_; }

  static bool is_container(const std::filesystem::path& dir);
  static Container load(const std::filesystem::path& dir);
  void save(const std::filesystem::path& dir) const;

  friend bool operator==(const Container&, const Container&) = default;

 private:
  void insert(ArrayEntry entry);
  std::vector<ArrayEntry> arrays_;
};

/// Copies the scene's arrays (coords, colors, superpoint_id, sem_gt, inst_gt)
/// and metadata into the container, replacing existing entries.
void put_scene(Container& c, const Scene& scene);
/// Decodes and validates a Scene from a container.
Scene scene_from_container(const Container& c);

Scene load_scene(const std::filesystem::path& dir);
void save_scene(const Scene& scene, const std::filesystem::path& dir);

}  // namespace icr
