#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mxp/model.hpp"
#include "mxp/tensor.hpp"

namespace mxp {

// Model file: "MXPL1" magic, a line-oriented text manifest, an "end" line,
// then the payload as raw little-endian 64-bit floats in manifest order.
// Round-trips are bitwise lossless, including -inf entries.

namespace detail {

inline void write_doubles_le(std::ofstream& f, const Tensor& t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::uint64_t bits;
    double v = t[i];
    std::memcpy(&bits, &v, 8);
    unsigned char buf[8];
    for (int b = 0; b < 8; ++b) buf[b] = static_cast<unsigned char>(bits >> (8 * b));
    f.write(reinterpret_cast<char*>(buf), 8);
  }
}

inline void read_doubles_le(std::ifstream& f, Tensor& t,
                            const std::string& path) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    unsigned char buf[8];
    f.read(reinterpret_cast<char*>(buf), 8);
    if (!f) throw FormatError("model payload truncated: " + path);
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t(buf[b]) << (8 * b);
    double v;
    std::memcpy(&v, &bits, 8);
    t[i] = v;
  }
}

inline void manifest_tensor(std::ostream& os, const std::string& name,
                            const Tensor& t) {
  if (t.size() == 0) return;
  os << "tensor " << name << " " << t.rank();
  for (std::size_t d : t.shape()) os << " " << d;
  os << "\n";
}

}  // namespace detail

inline void save_model(const Model& m, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("save_model: cannot open " + path);
  std::ostringstream hdr;
  hdr << "MXPL1\n";
  hdr << "arch " << arch_name(m.arch) << "\n";
  hdr << "geometry " << m.channels << " " << m.rows << " " << m.cols << "\n";
  if (m.arch == Arch::MaxoutLinear) {
    hdr << "maxout_group " << m.maxout_group << "\n";
  }
  hdr << "head " << (m.pruned_head ? "pruned" : "standard") << "\n";

  std::vector<const Tensor*> payload;
  auto add = [&](const std::string& name, const Tensor& t) {
    if (t.size() == 0) return;
    detail::manifest_tensor(hdr, name, t);
    payload.push_back(&t);
  };
  add("wf", m.wf);
  add("wm", m.wm);
  add("conv1", m.conv1);
  add("conv2", m.conv2);
  add("fc1", m.fc1);
  add("fc2", m.fc2);
  add("fc3", m.fc3);
  if (m.pruned_head) {
    add("retained_filters", m.pruned_head->retained_filters);
    for (std::size_t k = 0; k < m.pruned_head->groups.size(); ++k) {
      hdr << "group " << k;
      for (const auto& [j, off] : m.pruned_head->groups[k]) {
        std::uint64_t bits;
        std::memcpy(&bits, &off, 8);
        hdr << " " << j << ":" << bits;  // offset as raw bits, lossless
      }
      hdr << "\n";
    }
    hdr << "retained_cols";
    for (std::size_t c : m.pruned_head->retained_cols) hdr << " " << c;
    hdr << "\n";
  }
  hdr << "end\n";
  f << hdr.str();
  for (const Tensor* t : payload) detail::write_doubles_le(f, *t);
  if (!f) throw FormatError("save_model: write failed for " + path);
}

inline Model load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("load_model: cannot open " + path);
  std::string line;
  if (!std::getline(f, line) || line != "MXPL1") {
    throw FormatError("load_model: bad magic in " + path);
  }
  Model m;
  bool pruned = false;
  std::vector<std::pair<std::string, std::vector<std::size_t>>> manifest;
  std::vector<std::vector<std::pair<std::size_t, double>>> groups;
  std::vector<std::size_t> retained_cols;
  while (std::getline(f, line)) {
    if (line == "end") break;
    std::istringstream is(line);
    std::string key;
    is >> key;
    if (key == "arch") {
      std::string name;
      is >> name;
      m.arch = arch_from_name(name);
    } else if (key == "geometry") {
      is >> m.channels >> m.rows >> m.cols;
    } else if (key == "maxout_group") {
      is >> m.maxout_group;
    } else if (key == "head") {
      std::string h;
      is >> h;
      pruned = (h == "pruned");
    } else if (key == "tensor") {
      std::string name;
      std::size_t rank;
      is >> name >> rank;
      std::vector<std::size_t> shape(rank);
      for (auto& d : shape) is >> d;
      if (!is) throw FormatError("load_model: malformed tensor line: " + line);
      manifest.emplace_back(name, shape);
    } else if (key == "group") {
      std::size_t k;
      is >> k;
      if (groups.size() <= k) groups.resize(k + 1);
      std::string entry;
      while (is >> entry) {
        const auto colon = entry.find(':');
        if (colon == std::string::npos) {
          throw FormatError("load_model: malformed group entry: " + entry);
        }
        const std::size_t j = std::stoull(entry.substr(0, colon));
        const std::uint64_t bits = std::stoull(entry.substr(colon + 1));
        double off;
        std::memcpy(&off, &bits, 8);
        groups[k].emplace_back(j, off);
      }
    } else if (key == "retained_cols") {
      std::size_t c;
      while (is >> c) retained_cols.push_back(c);
    } else if (!key.empty()) {
      throw FormatError("load_model: unknown manifest key: " + key);
    }
  }
  if (line != "end") throw FormatError("load_model: manifest missing end: " + path);

  Tensor retained_filters;
  for (const auto& [name, shape] : manifest) {
    Tensor t(shape);
    detail::read_doubles_le(f, t, path);
    if (name == "wf") m.wf = std::move(t);
    else if (name == "wm") m.wm = std::move(t);
    else if (name == "conv1") m.conv1 = std::move(t);
    else if (name == "conv2") m.conv2 = std::move(t);
    else if (name == "fc1") m.fc1 = std::move(t);
    else if (name == "fc2") m.fc2 = std::move(t);
    else if (name == "fc3") m.fc3 = std::move(t);
    else if (name == "retained_filters") retained_filters = std::move(t);
    else throw FormatError("load_model: unknown tensor name: " + name);
  }
  // Trailing bytes mean header and payload disagree.
  f.peek();
  if (!f.eof()) throw FormatError("load_model: payload longer than manifest: " + path);

  if (pruned) {
    PrunedHead head;
    head.retained_filters = std::move(retained_filters);
    head.groups = std::move(groups);
    head.retained_cols = std::move(retained_cols);
    if (head.retained_filters.rank() != 2 ||
        head.retained_filters.dim(1) != head.retained_cols.size()) {
      throw FormatError("load_model: pruned head shape mismatch: " + path);
    }
    head.validate();
    m.pruned_head = std::move(head);
  }
  return m;
}

}  // namespace mxp
