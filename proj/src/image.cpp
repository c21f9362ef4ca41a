#include "rcpn/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>

#include "rcpn/error.hpp"

namespace rcpn {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Minimal PNM tokenizer tracking byte offsets for error messages.
struct PnmParser {
  const std::string& buf;
  const std::string& path;
  std::size_t pos = 0;

  [[noreturn]] void fail(const std::string& what) const {
    std::ostringstream os;
    os << path << ": " << what << " at byte offset " << pos;
    throw DataError(os.str());
  }

  void skip_space() {
    while (pos < buf.size()) {
      char c = buf[pos];
      if (c == '#') {
        while (pos < buf.size() && buf[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos;
      } else {
        break;
      }
    }
  }

  int next_int() {
    skip_space();
    if (pos >= buf.size()) fail("unexpected end of file while reading integer");
    if (!isdigit(static_cast<unsigned char>(buf[pos]))) fail("expected integer");
    long v = 0;
    while (pos < buf.size() && isdigit(static_cast<unsigned char>(buf[pos]))) {
      v = v * 10 + (buf[pos] - '0');
      if (v > 1 << 30) fail("integer too large");
      ++pos;
    }
    return static_cast<int>(v);
  }

  std::string magic() {
    skip_space();
    if (pos + 2 > buf.size()) fail("missing magic");
    std::string m = buf.substr(pos, 2);
    pos += 2;
    return m;
  }

  // Single whitespace byte separating the header from a binary payload.
  void raster_separator() {
    if (pos >= buf.size() || !isspace(static_cast<unsigned char>(buf[pos])))
      fail("expected whitespace before binary raster");
    ++pos;
  }
};

void check_dims(PnmParser& p, int w, int h, int maxval) {
  if (w < 1 || h < 1) p.fail("non-positive image dimensions");
  if (maxval != 255) p.fail("unsupported maxval (only 255 is accepted)");
}

}  // namespace

PixelGrid load_image(const std::string& path) {
  std::string buf = read_file(path);
  PnmParser p{buf, path};
  std::string m = p.magic();
  if (m != "P3" && m != "P6") p.fail("not a PPM file (magic '" + m + "')");
  int w = p.next_int(), h = p.next_int(), maxval = p.next_int();
  check_dims(p, w, h, maxval);
  PixelGrid img(w, h);
  std::size_t n = 3ull * w * h;
  if (m == "P6") {
    p.raster_separator();
    if (buf.size() - p.pos < n) {
      std::ostringstream os;
      os << path << ": truncated P6 payload, expected " << n << " bytes but found "
         << buf.size() - p.pos;
      throw DataError(os.str());
    }
    for (std::size_t i = 0; i < n; ++i)
      img.data[i] = static_cast<unsigned char>(buf[p.pos + i]) / 255.0;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      int v = p.next_int();
      if (v > maxval) p.fail("sample value exceeds maxval");
      img.data[i] = v / 255.0;
    }
  }
  return img;
}

void write_ppm(const std::string& path, const PixelGrid& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  for (double v : img.data) {
    double c = std::clamp(v, 0.0, 1.0);
    out.put(static_cast<char>(std::lround(c * 255.0)));
  }
  if (!out) throw DataError("write failed: " + path);
}

LabelGrid load_labels(const std::string& path, int void_value) {
  std::string buf = read_file(path);
  PnmParser p{buf, path};
  std::string m = p.magic();
  if (m != "P2" && m != "P5") p.fail("not a PGM file (magic '" + m + "')");
  int w = p.next_int(), h = p.next_int(), maxval = p.next_int();
  check_dims(p, w, h, maxval);
  LabelGrid lg(w, h);
  std::size_t n = std::size_t(w) * h;
  if (m == "P5") {
    p.raster_separator();
    if (buf.size() - p.pos < n) {
      std::ostringstream os;
      os << path << ": truncated P5 payload, expected " << n << " bytes but found "
         << buf.size() - p.pos;
      throw DataError(os.str());
    }
    for (std::size_t i = 0; i < n; ++i) {
      int v = static_cast<unsigned char>(buf[p.pos + i]);
      lg.labels[i] = (v == void_value) ? kVoid : v;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      int v = p.next_int();
      if (v > maxval) p.fail("sample value exceeds maxval");
      lg.labels[i] = (v == void_value) ? kVoid : v;
    }
  }
  return lg;
}

void write_labels(const std::string& path, const LabelGrid& labels, int void_value) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << "P5\n" << labels.width << " " << labels.height << "\n255\n";
  for (int v : labels.labels) {
    int b = (v == kVoid) ? void_value : v;
    if (b < 0 || b > 255) throw DataError("label value out of PGM range: " + std::to_string(v));
    out.put(static_cast<char>(b));
  }
  if (!out) throw DataError("write failed: " + path);
}

SegmentationMap grid_superpixels(const PixelGrid& img, int target_count) {
  if (target_count < 1 || std::size_t(target_count) > std::size_t(img.width) * img.height)
    throw DataError("grid_superpixels: target_count out of range");
  int nx = static_cast<int>(std::ceil(std::sqrt(double(target_count))));
  int ny = std::max(1, target_count / nx);
  nx = std::min(nx, img.width);
  ny = std::min(ny, img.height);
  SegmentationMap seg;
  seg.width = img.width;
  seg.height = img.height;
  seg.count = nx * ny;
  seg.ids.resize(std::size_t(img.width) * img.height);
  for (int y = 0; y < img.height; ++y) {
    int by = std::min(int(std::size_t(y) * ny / img.height), ny - 1);
    for (int x = 0; x < img.width; ++x) {
      int bx = std::min(int(std::size_t(x) * nx / img.width), nx - 1);
      seg.at(x, y) = by * nx + bx;
    }
  }
  return seg;
}

namespace {

// Relabel to consecutive ids 0..S-1 in first-appearance order.
void compact_ids(SegmentationMap& seg) {
  std::vector<int> remap;
  std::map<int, int> seen;
  for (int& id : seg.ids) {
    auto it = seen.find(id);
    if (it == seen.end()) {
      int next = static_cast<int>(seen.size());
      seen.emplace(id, next);
      id = next;
    } else {
      id = it->second;
    }
  }
  seg.count = static_cast<int>(seen.size());
}

// Merge 4-connected components so each final super-pixel is contiguous:
// every component that is not the largest of its cluster joins a neighbor.
void enforce_connectivity(SegmentationMap& seg) {
  int w = seg.width, h = seg.height;
  std::vector<int> comp(seg.ids.size(), -1);
  std::vector<int> comp_cluster, comp_size;
  int ncomp = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (comp[std::size_t(y) * w + x] >= 0) continue;
      int cluster = seg.at(x, y);
      int size = 0;
      std::queue<std::pair<int, int>> q;
      q.push({x, y});
      comp[std::size_t(y) * w + x] = ncomp;
      while (!q.empty()) {
        auto [cx, cy] = q.front();
        q.pop();
        ++size;
        const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          int nxp = cx + dx[k], nyp = cy + dy[k];
          if (nxp < 0 || nyp < 0 || nxp >= w || nyp >= h) continue;
          std::size_t idx = std::size_t(nyp) * w + nxp;
          if (comp[idx] < 0 && seg.ids[idx] == cluster) {
            comp[idx] = ncomp;
            q.push({nxp, nyp});
          }
        }
      }
      comp_cluster.push_back(cluster);
      comp_size.push_back(size);
      ++ncomp;
    }
  // keep the largest component per cluster, ties to the smaller component id
  std::vector<int> main_comp(seg.count, -1);
  for (int c = 0; c < ncomp; ++c) {
    int cl = comp_cluster[c];
    if (main_comp[cl] < 0 || comp_size[c] > comp_size[main_comp[cl]]) main_comp[cl] = c;
  }
  // orphan components adopt the smallest adjacent component id, repeating
  // until everything is attached to a main component
  std::vector<int> target(ncomp);
  for (int c = 0; c < ncomp; ++c) target[c] = c;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        int c = comp[std::size_t(y) * w + x];
        if (target[c] != c) continue;
        if (c == main_comp[comp_cluster[c]]) continue;
        int best = -1;
        const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          int nxp = x + dx[k], nyp = y + dy[k];
          if (nxp < 0 || nyp < 0 || nxp >= w || nyp >= h) continue;
          int nc = comp[std::size_t(nyp) * w + nxp];
          while (target[nc] != nc) nc = target[nc];
          if (nc != c && (best < 0 || nc < best)) best = nc;
        }
        if (best >= 0) {
          target[c] = best;
          changed = true;
        }
      }
  }
  for (std::size_t i = 0; i < seg.ids.size(); ++i) {
    int c = comp[i];
    while (target[c] != c) c = target[c];
    seg.ids[i] = c;
  }
  compact_ids(seg);
}

}  // namespace

SegmentationMap slic_superpixels(const PixelGrid& img, int target_count, double compactness,
                                 int iters) {
  if (target_count < 1) throw DataError("slic_superpixels: target_count must be >= 1");
  if (iters < 1) throw DataError("slic_superpixels: iters must be >= 1");
  if (compactness <= 0.0) throw DataError("slic_superpixels: compactness must be > 0");

  SegmentationMap seed_grid = grid_superpixels(img, target_count);
  int k = seed_grid.count;
  if (k == 1) return seed_grid;

  // seed centers at the centroid of each grid cell
  struct Center {
    double r, g, b, x, y;
    double nr, ng, nb, nx, ny;
    int n;
  };
  std::vector<Center> centers(k, Center{});
  {
    std::vector<double> cx(k, 0), cy(k, 0);
    std::vector<int> cnt(k, 0);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        int id = seed_grid.at(x, y);
        cx[id] += x;
        cy[id] += y;
        ++cnt[id];
      }
    for (int i = 0; i < k; ++i) {
      int px = static_cast<int>(cx[i] / cnt[i]);
      int py = static_cast<int>(cy[i] / cnt[i]);
      centers[i] = {img.at(px, py, 0), img.at(px, py, 1), img.at(px, py, 2),
                    double(px),        double(py),        0, 0, 0, 0, 0, 0};
    }
  }

  double step = std::sqrt(double(img.width) * img.height / k);
  double spatial = compactness / step;

  SegmentationMap seg;
  seg.width = img.width;
  seg.height = img.height;
  seg.ids.assign(std::size_t(img.width) * img.height, 0);

  for (int it = 0; it < iters; ++it) {
    std::vector<double> best(seg.ids.size(), 1e300);
    for (int i = 0; i < k; ++i) {
      int x0 = std::max(0, int(centers[i].x - 2 * step));
      int x1 = std::min(img.width - 1, int(centers[i].x + 2 * step));
      int y0 = std::max(0, int(centers[i].y - 2 * step));
      int y1 = std::min(img.height - 1, int(centers[i].y + 2 * step));
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          double dr = img.at(x, y, 0) - centers[i].r;
          double dg = img.at(x, y, 1) - centers[i].g;
          double db = img.at(x, y, 2) - centers[i].b;
          double dx = (x - centers[i].x) * spatial;
          double dy = (y - centers[i].y) * spatial;
          double d = dr * dr + dg * dg + db * db + dx * dx + dy * dy;
          std::size_t idx = std::size_t(y) * img.width + x;
          if (d < best[idx]) {
            best[idx] = d;
            seg.ids[idx] = i;
          }
        }
    }
    // pixels outside every search window fall back to the seed grid
    for (std::size_t idx = 0; idx < seg.ids.size(); ++idx)
      if (best[idx] >= 1e300) seg.ids[idx] = seed_grid.ids[idx];
    for (auto& c : centers) {
      c.nr = c.ng = c.nb = c.nx = c.ny = 0;
      c.n = 0;
    }
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        Center& c = centers[seg.at(x, y)];
        c.nr += img.at(x, y, 0);
        c.ng += img.at(x, y, 1);
        c.nb += img.at(x, y, 2);
        c.nx += x;
        c.ny += y;
        ++c.n;
      }
    for (auto& c : centers)
      if (c.n > 0) {
        c.r = c.nr / c.n;
        c.g = c.ng / c.n;
        c.b = c.nb / c.n;
        c.x = c.nx / c.n;
        c.y = c.ny / c.n;
      }
  }
  seg.count = k;
  enforce_connectivity(seg);
  return seg;
}

SuperpixelGraph build_graph(const SegmentationMap& seg, const PixelGrid& img,
                            const LabelGrid* labels) {
  if (seg.width != img.width || seg.height != img.height)
    throw DataError("build_graph: segmentation and image dimensions differ");
  if (labels && (labels->width != img.width || labels->height != img.height))
    throw DataError("build_graph: label map and image dimensions differ");

  int s = seg.count;
  SuperpixelGraph g;
  g.count = s;
  g.pixel_counts.assign(s, 0);

  std::vector<double> sum(3ull * s, 0.0), sumsq(3ull * s, 0.0);
  std::vector<double> cx(s, 0.0), cy(s, 0.0);
  std::vector<std::map<int, int>> hist(labels ? s : 0);
  std::vector<std::vector<char>> adj(s, std::vector<char>(s, 0));

  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      int id = seg.at(x, y);
      if (id < 0 || id >= s) throw DataError("build_graph: super-pixel id out of range");
      ++g.pixel_counts[id];
      for (int c = 0; c < 3; ++c) {
        double v = img.at(x, y, c);
        sum[3ull * id + c] += v;
        sumsq[3ull * id + c] += v * v;
      }
      cx[id] += x;
      cy[id] += y;
      if (labels) {
        int l = labels->at(x, y);
        if (l != kVoid) ++hist[id][l];
      }
      if (x + 1 < img.width && seg.at(x + 1, y) != id) {
        adj[id][seg.at(x + 1, y)] = adj[seg.at(x + 1, y)][id] = 1;
      }
      if (y + 1 < img.height && seg.at(x, y + 1) != id) {
        adj[id][seg.at(x, y + 1)] = adj[seg.at(x, y + 1)][id] = 1;
      }
    }

  for (int i = 0; i < s; ++i)
    if (g.pixel_counts[i] == 0)
      throw DataError("build_graph: empty super-pixel id " + std::to_string(i));

  double area = double(img.width) * img.height;
  g.features.resize(s);
  for (int i = 0; i < s; ++i) {
    int n = g.pixel_counts[i];
    Vec f(9);
    for (int c = 0; c < 3; ++c) {
      double mean = sum[3ull * i + c] / n;
      double var = std::max(0.0, sumsq[3ull * i + c] / n - mean * mean);
      f[c] = mean;
      f[3 + c] = std::sqrt(var);
    }
    f[6] = cx[i] / n / img.width;
    f[7] = cy[i] / n / img.height;
    f[8] = n / area;
    g.features[i] = std::move(f);
  }

  g.adjacency.resize(s);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j)
      if (i != j && adj[i][j]) g.adjacency[i].push_back(j);

  // connectivity check (single super-pixel is trivially connected)
  if (s > 1) {
    std::vector<char> seen(s, 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int v : g.adjacency[u])
        if (!seen[v]) {
          seen[v] = 1;
          ++reached;
          q.push(v);
        }
    }
    if (reached != s)
      throw DataError("build_graph: super-pixel adjacency graph is disconnected (" +
                      std::to_string(reached) + " of " + std::to_string(s) + " reachable)");
  }

  if (labels) {
    std::vector<int> lab(s, kVoid);
    for (int i = 0; i < s; ++i) {
      int best = kVoid, best_count = 0;
      for (auto [cls, cnt] : hist[i])  // map iterates ascending, ties keep smaller index
        if (cnt > best_count) {
          best = cls;
          best_count = cnt;
        }
      lab[i] = best;
    }
    g.labels = std::move(lab);
  }
  return g;
}

SuperpixelGraph import_features(const std::string& path, const SuperpixelGraph& graph) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature file: " + path);
  std::vector<Vec> feats(graph.count);
  std::vector<char> seen(graph.count, 0);
  std::string line;
  int row = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        while (used < tok.size() && isspace(static_cast<unsigned char>(tok[used]))) ++used;
        if (used != tok.size()) throw std::invalid_argument(tok);
        vals.push_back(v);
      } catch (const std::exception&) {
        throw DataError(path + ": row " + std::to_string(row) + ": bad number '" + tok + "'");
      }
    }
    if (vals.size() < 2)
      throw DataError(path + ": row " + std::to_string(row) + ": need id plus features");
    int id = static_cast<int>(vals[0]);
    if (vals[0] != id || id < 0 || id >= graph.count)
      throw DataError(path + ": row " + std::to_string(row) + ": bad super-pixel id");
    if (seen[id])
      throw DataError(path + ": row " + std::to_string(row) + ": duplicate id " +
                      std::to_string(id));
    seen[id] = 1;
    Vec f(vals.begin() + 1, vals.end());
    if (dim == 0)
      dim = f.size();
    else if (f.size() != dim)
      throw DataError(path + ": row " + std::to_string(row) + ": ragged row, expected " +
                      std::to_string(dim) + " features");
    feats[id] = std::move(f);
  }
  for (int i = 0; i < graph.count; ++i)
    if (!seen[i]) throw DataError(path + ": missing id " + std::to_string(i));
  SuperpixelGraph out = graph;
  out.features = std::move(feats);
  return out;
}

void export_features(const std::string& path, const SuperpixelGraph& graph) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write feature file: " + path);
  out.precision(17);
  for (int i = 0; i < graph.count; ++i) {
    out << i;
    for (double v : graph.features[i]) out << ',' << v;
    out << '\n';
  }
}

namespace {

void class_color(int cls, int variant, double* rgb) {
  switch (cls) {
    case 0: rgb[0] = 0.10; rgb[1] = 0.80; rgb[2] = 0.15; return;  // identifiable A
    case 1: rgb[0] = 0.90; rgb[1] = 0.85; rgb[2] = 0.10; return;  // identifiable B
    case 2:                                                       // marker, two variants
      if (variant == 0) { rgb[0] = 0.90; rgb[1] = 0.10; rgb[2] = 0.10; }
      else              { rgb[0] = 0.10; rgb[1] = 0.15; rgb[2] = 0.90; }
      return;
    default: {
      auto frac = [](double v) { return v - std::floor(v); };
      rgb[0] = 0.2 + 0.6 * frac(0.31 * cls);
      rgb[1] = 0.2 + 0.6 * frac(0.57 * cls);
      rgb[2] = 0.2 + 0.6 * frac(0.83 * cls);
      return;
    }
  }
}

}  // namespace

SynthImage generate_synthetic(const SynthSpec& spec, Rng& rng) {
  if (spec.classes < 3) throw DataError("generate_synthetic: need at least 3 classes");
  if (spec.cells_x < 1 || spec.cells_y < 1 || spec.cell_size < 1)
    throw DataError("generate_synthetic: bad grid size");
  if (spec.ambiguity < 0.0 || spec.ambiguity > 1.0)
    throw DataError("generate_synthetic: ambiguity must be in [0,1]");

  int ncells = spec.cells_x * spec.cells_y;
  int w = spec.cells_x * spec.cell_size, h = spec.cells_y * spec.cell_size;

  SynthImage out;
  out.marker_cell = static_cast<int>(rng.index(ncells));
  out.marker_variant = static_cast<int>(rng.index(2));

  std::vector<int> others;
  for (int c = 0; c < ncells; ++c)
    if (c != out.marker_cell) others.push_back(c);
  rng.shuffle(others);
  int n_amb = static_cast<int>(std::lround(spec.ambiguity * others.size()));
  out.ambiguous_cells.assign(others.begin(), others.begin() + n_amb);
  std::sort(out.ambiguous_cells.begin(), out.ambiguous_cells.end());

  std::vector<int> cell_label(ncells);
  std::vector<bool> is_amb(ncells, false);
  for (int c : out.ambiguous_cells) is_amb[c] = true;
  // locally identifiable classes: everything except the marker class 2
  std::vector<int> pool;
  for (int c = 0; c < spec.classes; ++c)
    if (c != 2) pool.push_back(c);
  for (int c = 0; c < ncells; ++c) {
    if (c == out.marker_cell)
      cell_label[c] = 2;
    else if (is_amb[c])
      cell_label[c] = (out.marker_variant == 0) ? 0 : 1;
    else
      cell_label[c] = pool[rng.index(pool.size())];
  }

  out.image = PixelGrid(w, h);
  out.labels = LabelGrid(w, h);
  for (int cy = 0; cy < spec.cells_y; ++cy)
    for (int cx = 0; cx < spec.cells_x; ++cx) {
      int c = cy * spec.cells_x + cx;
      double rgb[3];
      if (is_amb[c]) {
        rgb[0] = rgb[1] = rgb[2] = 0.5;  // gray, indistinguishable locally
      } else {
        class_color(cell_label[c], out.marker_variant, rgb);
      }
      for (int py = 0; py < spec.cell_size; ++py)
        for (int px = 0; px < spec.cell_size; ++px) {
          int x = cx * spec.cell_size + px, y = cy * spec.cell_size + py;
          for (int ch = 0; ch < 3; ++ch) {
            double v = rgb[ch] + rng.uniform(-spec.noise, spec.noise);
            out.image.at(x, y, ch) = std::clamp(v, 0.0, 1.0);
          }
          out.labels.at(x, y) = cell_label[c];
        }
    }
  return out;
}

}  // namespace rcpn
