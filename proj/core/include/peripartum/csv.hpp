#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace peripartum {

struct CsvTable {
  char delimiter = ',';
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Picks among ',', ';' and '\t' by which splits the header line into the
/// most fields outside quotes; ties go to the earlier candidate.
char detect_delimiter(std::string_view text);

/// RFC 4180 reading: quoted fields may hold delimiters, newlines and doubled
/// quotes; CRLF and LF both end records; a UTF-8 BOM is skipped. The first
/// record is the header. Trailing empty lines are dropped.
CsvTable parse_csv(std::string_view text);
CsvTable parse_csv(std::string_view text, char delimiter);

/// One record, quoting only the fields that need it.
std::string csv_line(const std::vector<std::string>& fields, char delimiter = ',');

}  // namespace peripartum
