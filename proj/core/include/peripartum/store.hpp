#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>

#include "peripartum/records.hpp"

namespace peripartum {

template <class R>
using Table = std::map<typename R::Key, R>;

namespace detail {
template <class R>
using TablePtr = std::shared_ptr<const Table<R>>;

template <class L>
struct TablesOf;
template <class... Ts>
struct TablesOf<TypeList<Ts...>> {
  using type = std::tuple<TablePtr<Ts>...>;
};
}  // namespace detail

/// Surrogate id carried by a record, for the relations that mint their own ids.
template <class R>
constexpr bool kMintsId = std::is_same_v<R, Pregnancy> || std::is_same_v<R, Condition> ||
                          std::is_same_v<R, Examination> || std::is_same_v<R, Test> ||
                          std::is_same_v<R, Tracing>;

/// In-memory relational instance. Copies are cheap: tables are shared until
/// one side writes to them (copy-on-write per table), so a copy behaves as an
/// immutable snapshot.
class CanonicalStore {
 public:
  CanonicalStore();

  template <class R>
  const Table<R>& table() const {
    return *std::get<detail::TablePtr<R>>(tables_);
  }

  template <class R>
  const R* find(const typename R::Key& key) const {
    const auto& t = table<R>();
    auto it = t.find(key);
    return it == t.end() ? nullptr : &it->second;
  }

  /// Record with the same relation and key as `probe`, if stored.
  std::optional<AnyRecord> find_any(const AnyRecord& probe) const;

  template <class R>
  void put(R record) {
    note_id(record);
    auto key = record.key();
    mutable_table<R>().insert_or_assign(std::move(key), std::move(record));
  }
  void put(const AnyRecord& record);

  template <class R>
  bool erase(const typename R::Key& key) {
    if (!find<R>(key)) return false;
    return mutable_table<R>().erase(key) > 0;
  }
  /// Erases the record keyed like `probe`.
  bool erase(const AnyRecord& probe);

  /// Next unused surrogate id for a relation that mints ids; ids are never reused,
  /// even after deletes.
  int64_t next_id(std::string_view relation) const;
  int64_t high_water(std::string_view relation) const;

  size_t count(std::string_view relation) const;
  size_t size() const;
  bool empty() const { return size() == 0; }

  bool operator==(const CanonicalStore& other) const;

 private:
  template <class R>
  Table<R>& mutable_table() {
    auto& p = std::get<detail::TablePtr<R>>(tables_);
    if (p.use_count() > 1) p = std::make_shared<Table<R>>(*p);
    return const_cast<Table<R>&>(*p);
  }

  template <class R>
  void note_id(const R& r) {
    if constexpr (kMintsId<R>) {
      auto& hw = high_water_[std::string(R::kRelation)];
      hw = std::max(hw, static_cast<int64_t>(r.key()));
    }
  }

  detail::TablesOf<RecordTypes>::type tables_;
  std::map<std::string, int64_t, std::less<>> high_water_;
};

/// Canonical text form: one JSON object per line, relations in dependency order,
/// records in key order. Equal stores serialize to identical bytes.
std::string serialize_store(const CanonicalStore& store);

}  // namespace peripartum
