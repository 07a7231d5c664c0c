#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Categorical vocabularies of the admission-level features and the fixed
// column layout of the admissions feature block.
namespace readmit::schema {

inline constexpr std::string_view kMissing = "";
inline constexpr std::string_view kNone = "NONE";

struct Categorical {
  std::string_view name;
  std::span<const std::string_view> values;
  // Adds one indicator column for an empty (missing) value.
  bool missing_column;
  // Adds one indicator column for "no previous admission".
  bool none_column;

  std::size_t width() const { return values.size() + (missing_column ? 1 : 0) + (none_column ? 1 : 0); }
};

std::span<const std::string_view> genders();
std::span<const std::string_view> admission_types();
std::span<const std::string_view> admission_locations();
std::span<const std::string_view> discharge_locations();
std::span<const std::string_view> insurances();
// Collapsed language values: ENGLISH or OTHER.
std::span<const std::string_view> languages();
std::span<const std::string_view> ethnicities();
std::span<const std::string_view> marital_statuses();

// One-hot groups of the admissions block, in column order.
std::span<const Categorical> admission_categoricals();

inline constexpr std::size_t kAdmissionNumericColumns = 4;
inline constexpr std::size_t kAdmissionBlockWidth = 78;

// Column names of the admissions block, numeric columns first:
// age, month_of_admission, length_of_stay_hours, days_since_previous, then
// "<group>=<value>" indicators with "<group>=<missing>" / "<group>=NONE".
const std::vector<std::string>& admission_column_names();

// Position of `value` in a categorical's indicator columns, or -1 if the
// value is outside the vocabulary.
int category_index(const Categorical& cat, std::string_view value);

// Language collapse: "ENGLISH" stays, empty stays missing, anything else is OTHER.
std::string_view collapse_language(std::string_view raw);

}  // namespace readmit::schema
