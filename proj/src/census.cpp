#include "pvea/mpeg_syntax.hpp"

namespace pvea {

const char* category_name(Category c) {
  switch (c) {
    case Category::sr: return "sr";
    case Category::sd: return "sd";
    case Category::mv: return "mv";
  }
  return "?";
}

Category category_of(const FlcKind& kind) {
  switch (kind_index(kind)) {
    case 0: return Category::sr;
    case 1:
    case 2: return Category::sd;
    default: return Category::mv;
  }
}

std::size_t Census::total() const {
  std::size_t n = 0;
  for (std::size_t c : per_category) n += c;
  return n;
}

Census census(const StreamMap& map) {
  Census out;
  out.per_picture.assign(map.pictures.size(), 0);
  out.per_picture_category.assign(map.pictures.size(), {});
  for (const FlcSite& site : map.sites) {
    const auto cat = static_cast<std::size_t>(category_of(site.kind));
    ++out.per_kind[static_cast<std::size_t>(kind_index(site.kind))];
    ++out.per_category[cat];
    if (site.picture_index < out.per_picture.size()) {
      ++out.per_picture[site.picture_index];
      ++out.per_picture_category[site.picture_index][cat];
    }
  }
  return out;
}

}  // namespace pvea
