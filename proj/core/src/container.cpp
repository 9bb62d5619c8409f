#include "icr/container.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>

namespace icr {
namespace fs = std::filesystem;
namespace {

static_assert(sizeof(float) == 4 && sizeof(std::int32_t) == 4);

template <typename T>
void to_little_endian(std::vector<char>& bytes) {
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i + sizeof(T) <= bytes.size(); i += sizeof(T)) {
      std::reverse(bytes.begin() + i, bytes.begin() + i + sizeof(T));
    }
  }
}

template <typename T>
void write_raw(const fs::path& path, const std::vector<T>& values) {
  std::vector<char> bytes(values.size() * sizeof(T));
  if (!bytes.empty()) std::memcpy(bytes.data(), values.data(), bytes.size());
  to_little_endian<T>(bytes);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

template <typename T>
std::vector<T> read_raw(const fs::path& path, std::size_t count,
                        const std::string& name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("array '" + name + "': cannot open '" + path.string() + "'");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (bytes.size() != count * sizeof(T)) {
    throw ShapeError("array '" + name + "': file holds " +
                     std::to_string(bytes.size() / sizeof(T)) +
                     " elements but manifest shape declares " +
                     std::to_string(count));
  }
  to_little_endian<T>(bytes);
  std::vector<T> out(count);
  if (count) std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

DType parse_dtype(const std::string& s, const std::string& name) {
  if (s == "f32") return DType::kF32;
  if (s == "i32") return DType::kI32;
  throw IoError("array '" + name + "': unsupported dtype '" + s + "'");
}

}  // namespace

std::string_view dtype_name(DType d) { return d == DType::kF32 ? "f32" : "i32"; }

std::size_t ArrayEntry::element_count() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::size_t ArrayEntry::cols() const {
  if (shape.size() <= 1) return 1;
  return std::accumulate(shape.begin() + 1, shape.end(), std::size_t{1},
                         std::multiplies<>());
}

void Container::insert(ArrayEntry entry) {
  if (entry.name.empty() || entry.name.find('/') != std::string::npos) {
    throw InvalidArgument("invalid array name '" + entry.name + "'");
  }
  auto it = std::find_if(arrays_.begin(), arrays_.end(),
                         [&](const ArrayEntry& e) { return e.name == entry.name; });
  if (it != arrays_.end()) {
    *it = std::move(entry);
  } else {
    arrays_.push_back(std::move(entry));
  }
}

void Container::put(std::string name, const MatrixF& m) {
  put(std::move(name), m.storage(), {m.rows(), m.cols()});
}

void Container::put(std::string name, std::vector<float> values,
                    std::vector<std::size_t> shape) {
  ArrayEntry e{std::move(name), DType::kF32, std::move(shape), std::move(values), {}};
  if (e.element_count() != e.f32.size()) {
    throw ShapeError("array '" + e.name + "': values do not match shape");
  }
  insert(std::move(e));
}

void Container::put(std::string name, std::vector<std::int32_t> values,
                    std::vector<std::size_t> shape) {
  ArrayEntry e{std::move(name), DType::kI32, std::move(shape), {}, std::move(values)};
  if (e.element_count() != e.i32.size()) {
    throw ShapeError("array '" + e.name + "': values do not match shape");
  }
  insert(std::move(e));
}

void Container::put_vector(std::string name, std::vector<float> values) {
  const auto n = values.size();
  put(std::move(name), std::move(values), {n});
}

void Container::put_vector(std::string name, std::vector<std::int32_t> values) {
  const auto n = values.size();
  put(std::move(name), std::move(values), {n});
}

bool Container::has(std::string_view name) const {
  return std::any_of(arrays_.begin(), arrays_.end(),
                     [&](const ArrayEntry& e) { return e.name == name; });
}

void Container::remove(std::string_view name) {
  std::erase_if(arrays_, [&](const ArrayEntry& e) { return e.name == name; });
}

const ArrayEntry& Container::get(std::string_view name) const {
  for (const auto& e : arrays_) {
    if (e.name == name) return e;
  }
  throw IoError("container '" + scene_id + "' has no array '" + std::string(name) + "'");
}

MatrixF Container::matrix_f32(std::string_view name) const {
  const auto& e = get(name);
  if (e.dtype != DType::kF32) throw IoError("array '" + e.name + "' is not f32");
  if (e.shape.size() > 2) throw IoError("array '" + e.name + "' has rank > 2");
  return MatrixF(e.rows(), e.cols(), e.f32);
}

std::vector<float> Container::vector_f32(std::string_view name) const {
  const auto& e = get(name);
  if (e.dtype != DType::kF32) throw IoError("array '" + e.name + "' is not f32");
  return e.f32;
}

std::vector<std::int32_t> Container::vector_i32(std::string_view name) const {
  const auto& e = get(name);
  if (e.dtype != DType::kI32) throw IoError("array '" + e.name + "' is not i32");
  return e.i32;
}

bool Container::is_container(const fs::path& dir) {
  return fs::is_regular_file(dir / kManifestName);
}

Container Container::load(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifestName;
  std::ifstream in(manifest_path);
  if (!in) throw IoError("missing manifest '" + manifest_path.string() + "'");
  nlohmann::ordered_json manifest;
  try {
    manifest = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest '" + manifest_path.string() + "': " + e.what());
  }
  Container c;
  try {
    const int version = manifest.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw IoError("unsupported ICRS format_version " + std::to_string(version));
    }
    c.scene_id = manifest.at("scene_id").get<std::string>();
    c.num_categories = manifest.at("C").get<int>();
    c.labeled = manifest.at("labeled").get<bool>();
    if (manifest.contains("attrs")) c.attrs = manifest["attrs"];
    for (const auto& a : manifest.at("arrays")) {
      ArrayEntry e;
      e.name = a.at("name").get<std::string>();
      e.dtype = parse_dtype(a.at("dtype").get<std::string>(), e.name);
      e.shape = a.at("shape").get<std::vector<std::size_t>>();
      const auto file = a.at("file").get<std::string>();
      if (fs::path(file).is_absolute() || file.find("..") != std::string::npos) {
        throw IoError("array '" + e.name + "': file must be inside the container");
      }
      if (e.dtype == DType::kF32) {
        e.f32 = read_raw<float>(dir / file, e.element_count(), e.name);
      } else {
        e.i32 = read_raw<std::int32_t>(dir / file, e.element_count(), e.name);
      }
      c.insert(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest '" + manifest_path.string() + "': " + e.what());
  }
  return c;
}

void Container::save(const fs::path& dir) const {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

  nlohmann::ordered_json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["scene_id"] = scene_id;
  manifest["C"] = num_categories;
  manifest["labeled"] = labeled;
  if (!attrs.empty()) manifest["attrs"] = attrs;
  manifest["arrays"] = nlohmann::ordered_json::array();
  for (const auto& e : arrays_) {
    const std::string file = e.name + ".bin";
    if (e.dtype == DType::kF32) {
      write_raw(dir / file, e.f32);
    } else {
      write_raw(dir / file, e.i32);
    }
    manifest["arrays"].push_back({{"name", e.name},
                                  {"dtype", dtype_name(e.dtype)},
                                  {"shape", e.shape},
                                  {"file", file}});
  }
  std::ofstream out(dir / kManifestName, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest in '" + dir.string() + "'");
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("failed writing manifest in '" + dir.string() + "'");
}

void put_scene(Container& c, const Scene& scene) {
  scene.validate();
  c.scene_id = scene.scene_id;
  c.num_categories = scene.num_categories;
  c.labeled = scene.labeled;
  c.put("coords", scene.coords);
  if (scene.colors) {
    c.put("colors", *scene.colors);
  } else {
    c.remove("colors");
  }
  const auto put_opt = [&](const char* name,
                           const std::optional<std::vector<std::int32_t>>& v) {
    if (v) {
      c.put_vector(name, *v);
    } else {
      c.remove(name);
    }
  };
  put_opt("superpoint_id", scene.superpoint_id);
  put_opt("sem_gt", scene.sem_gt);
  put_opt("inst_gt", scene.inst_gt);
}

Scene scene_from_container(const Container& c) {
  Scene s;
  s.scene_id = c.scene_id;
  s.num_categories = c.num_categories;
  s.labeled = c.labeled;
  s.coords = c.matrix_f32("coords");
  const std::size_t n = s.coords.rows();
  const auto check_rows = [&](const ArrayEntry& e) {
    if (e.rows() != n) {
      throw ShapeError("array '" + e.name + "' has " + std::to_string(e.rows()) +
                       " rows but 'coords' has " + std::to_string(n));
    }
  };
  if (c.has("colors")) {
    check_rows(c.get("colors"));
    s.colors = c.matrix_f32("colors");
  }
  if (c.has("superpoint_id")) {
    check_rows(c.get("superpoint_id"));
    s.superpoint_id = c.vector_i32("superpoint_id");
  }
  if (c.has("sem_gt")) {
    check_rows(c.get("sem_gt"));
    s.sem_gt = c.vector_i32("sem_gt");
  }
  if (c.has("inst_gt")) {
    check_rows(c.get("inst_gt"));
    s.inst_gt = c.vector_i32("inst_gt");
  }
  s.validate();
  return s;
}

Scene load_scene(const fs::path& dir) { return scene_from_container(Container::load(dir)); }

void save_scene(const Scene& scene, const fs::path& dir) {
  Container c;
  put_scene(c, scene);
  c.save(dir);
}

}  // namespace icr
