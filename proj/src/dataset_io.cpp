#include "mbcnn/dataset_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "mbcnn/image_io.hpp"

namespace fs = std::filesystem;

namespace mbcnn {

void write_dataset(const std::string& dir, const std::vector<MoirePair>& pairs) {
  fs::create_directories(dir);
  std::ofstream manifest(fs::path(dir) / "manifest.csv", std::ios::trunc);
  if (!manifest) throw std::runtime_error("cannot write manifest in " + dir);
  manifest << "id,seed\n";
  int width = 1;
  for (std::size_t n = pairs.size(); n > 10; n /= 10) ++width;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    std::string id = std::to_string(i);
    id.insert(0, std::size_t(width) - id.size(), '0');
    write_image(pairs[i].moire, (fs::path(dir) / (id + "_moire.png")).string());
    write_image(pairs[i].clean, (fs::path(dir) / (id + "_clean.png")).string());
    manifest << id << "," << pairs[i].seed << "\n";
  }
}

std::vector<DiskPair> read_pairs(const std::string& dir) {
  if (!fs::is_directory(dir))
    throw std::runtime_error("not a directory: " + dir);
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string stem = e.path().stem().string();
    const std::string suffix = "_moire";
    if (stem.size() > suffix.size() &&
        stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0)
      ids.push_back(stem.substr(0, stem.size() - suffix.size()));
  }
  std::sort(ids.begin(), ids.end());
  if (ids.empty()) throw std::runtime_error("no *_moire images in " + dir);

  std::vector<DiskPair> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) {
    DiskPair p;
    p.id = id;
    std::string moire_path, clean_path;
    for (const char* ext : {".png", ".ppm"}) {
      const auto m = fs::path(dir) / (id + "_moire" + ext);
      const auto c = fs::path(dir) / (id + "_clean" + ext);
      if (moire_path.empty() && fs::exists(m)) moire_path = m.string();
      if (clean_path.empty() && fs::exists(c)) clean_path = c.string();
    }
    if (clean_path.empty())
      throw std::runtime_error("pair " + id + " has no clean image in " + dir);
    p.moire = read_image(moire_path);
    p.clean = read_image(clean_path);
    if (!(p.moire.shape() == p.clean.shape()))
      throw std::runtime_error("pair " + id + " images differ in size");
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace mbcnn
