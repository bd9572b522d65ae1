#include "gridshield/strategy.hpp"

#include <cstring>
#include <fstream>

#include "gridshield/serialize.hpp"

namespace gridshield {

std::size_t Strategy::controllable_count() const {
  std::size_t n = 0;
  for (std::uint8_t m : masks)
    if (m) ++n;
  return n;
}

int lowest_action(std::uint8_t mask) {
  for (int a = 0; a < 8; ++a)
    if ((mask >> a) & 1u) return a;
  return -1;
}

std::uint8_t allowed_in_T(const Strategy& st, const Vec& t) {
  return st.masks[st.grid.flatten(st.grid.cell_of(t))];
}

std::uint8_t allowed_in_S(const Strategy& st, const Vec& s) {
  if (!box_contains(st.transform.domain, s))
    throw out_of_bounds("state outside the shield's state box");
  const Vec t = st.transform.forward(s);
  auto cell = st.grid.try_cell_of(t);
  if (!cell) return 0;  // image escapes the T grid: nothing is allowed
  return st.masks[st.grid.flatten(*cell)];
}

int filter_action(const Strategy& st, const Vec& s, int proposed) {
  const std::uint8_t mask = allowed_in_S(st, s);
  if (mask == 0) throw uncontrollable("no allowed action in this state");
  if (proposed >= 0 && mask_allows(mask, proposed)) return proposed;
  return lowest_action(mask);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {
constexpr char kShieldMagic[4] = {'S', 'H', 'L', 'D'};
constexpr std::uint32_t kFormatVersion = 1;
}  // namespace

namespace detail {

void write_header(Writer& w, const char magic[4], const GridSpec& grid,
                  const std::vector<std::string>& actions, const Transform& tr) {
  w.bytes(magic, 4);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(grid.dim()));
  for (const GridAxis& a : grid.axes()) {
    w.f64(a.low);
    w.f64(a.high);
    w.u64(a.count);
  }
  w.u32(static_cast<std::uint32_t>(actions.size()));
  for (const std::string& a : actions) {
    w.u32(static_cast<std::uint32_t>(a.size()));
    w.bytes(a.data(), a.size());
  }
  w.u32(tr.tag);
  w.u32(static_cast<std::uint32_t>(tr.params.size()));
  for (double p : tr.params) w.f64(p);
}

Header read_header(Reader& r, const char magic[4]) {
  char m[4];
  r.bytes(m, 4);
  if (std::memcmp(m, magic, 4) != 0)
    throw io_error("version mismatch: bad file magic");
  Header h;
  h.version = r.u32();
  if (h.version != kFormatVersion)
    throw io_error("version mismatch: unsupported format version " +
                   std::to_string(h.version));
  const std::uint32_t dim = r.u32();
  if (dim == 0 || dim > 64) throw io_error("corrupt file: bad dimension");
  std::vector<GridAxis> axes(dim);
  for (auto& a : axes) {
    a.low = r.f64();
    a.high = r.f64();
    const std::uint64_t count = r.u64();
    if (count == 0 || count > 0xffffffffULL)
      throw io_error("corrupt file: bad cell count");
    a.count = static_cast<std::uint32_t>(count);
  }
  try {
    h.grid = GridSpec(std::move(axes));
  } catch (const config_error& e) {
    throw io_error(std::string("corrupt file: ") + e.what());
  }
  const std::uint32_t n_actions = r.u32();
  if (n_actions == 0 || n_actions > 8)
    throw io_error("corrupt file: action count must be 1..8");
  for (std::uint32_t i = 0; i < n_actions; ++i) {
    const std::uint32_t len = r.u32();
    if (len > 4096) throw io_error("corrupt file: action name too long");
    std::string name(len, '\0');
    r.bytes(name.data(), len);
    h.actions.push_back(std::move(name));
  }
  const std::uint32_t tag = r.u32();
  const std::uint32_t n_params = r.u32();
  if (n_params > 4096) throw io_error("corrupt file: parameter list too long");
  std::vector<double> params(n_params);
  for (auto& p : params) p = r.f64();
  h.transform = transform_from_tag(tag, params, h.grid.bounds());
  return h;
}

}  // namespace detail

void save_strategy(const Strategy& st, const std::filesystem::path& path) {
  if (st.masks.size() != st.grid.cell_count())
    throw io_error("mask array does not match the grid cell count");
  detail::Writer w(path);
  detail::write_header(w, kShieldMagic, st.grid, st.actions, st.transform);
  w.bytes(reinterpret_cast<const char*>(st.masks.data()), st.masks.size());
  w.finish();
}

Strategy load_strategy(const std::filesystem::path& path) {
  detail::Reader r(path);
  detail::Header h = detail::read_header(r, kShieldMagic);
  Strategy st;
  st.grid = std::move(h.grid);
  st.actions = std::move(h.actions);
  st.transform = std::move(h.transform);
  st.masks.resize(st.grid.cell_count());
  r.bytes(reinterpret_cast<char*>(st.masks.data()), st.masks.size());
  r.expect_eof("corrupt file: trailing data after mask array");
  return st;
}

}  // namespace gridshield
