#include "peripartum/store.hpp"

#include "peripartum/record_json.hpp"

namespace peripartum {

CanonicalStore::CanonicalStore() {
  for_each_record_type([&]<class R>() {
    std::get<detail::TablePtr<R>>(tables_) = std::make_shared<const Table<R>>();
  });
}

std::optional<AnyRecord> CanonicalStore::find_any(const AnyRecord& probe) const {
  return std::visit(
      [&](const auto& r) -> std::optional<AnyRecord> {
        using R = std::decay_t<decltype(r)>;
        if (const R* hit = find<R>(r.key())) return AnyRecord(*hit);
        return std::nullopt;
      },
      probe);
}

void CanonicalStore::put(const AnyRecord& record) {
  std::visit([&](const auto& r) { put(r); }, record);
}

bool CanonicalStore::erase(const AnyRecord& probe) {
  return std::visit(
      [&](const auto& r) {
        using R = std::decay_t<decltype(r)>;
        return erase<R>(r.key());
      },
      probe);
}

int64_t CanonicalStore::high_water(std::string_view relation) const {
  auto it = high_water_.find(relation);
  return it == high_water_.end() ? 0 : it->second;
}

int64_t CanonicalStore::next_id(std::string_view relation) const { return high_water(relation) + 1; }

size_t CanonicalStore::count(std::string_view relation) const {
  size_t n = 0;
  for_each_record_type([&]<class R>() {
    if (R::kRelation == relation) n = table<R>().size();
  });
  return n;
}

size_t CanonicalStore::size() const {
  size_t n = 0;
  for_each_record_type([&]<class R>() { n += table<R>().size(); });
  return n;
}

bool CanonicalStore::operator==(const CanonicalStore& other) const {
  bool same = true;
  for_each_record_type([&]<class R>() {
    if (!same) return;
    const auto& a = std::get<detail::TablePtr<R>>(tables_);
    const auto& b = std::get<detail::TablePtr<R>>(other.tables_);
    same = a == b || *a == *b;
  });
  return same && high_water_ == other.high_water_;
}

std::string serialize_store(const CanonicalStore& store) {
  std::string out;
  for_each_record_type([&]<class R>() {
    for (const auto& [key, rec] : store.table<R>()) {
      out += record_to_json(AnyRecord(rec)).dump();
      out += '\n';
    }
  });
  return out;
}

}  // namespace peripartum
