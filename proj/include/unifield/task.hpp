#pragma once

#include <array>
#include <string>
#include <string_view>

namespace unifield {

enum class Modality { T1, T2, FLAIR };
enum class Field { mT64, T3, T7 };

std::string_view to_string(Modality m);
std::string_view to_string(Field f);
Modality parse_modality(std::string_view s);
Field parse_field(std::string_view s);

/// (modality, source field, target field) enhancement descriptor.
///
/// Only the 64mT->3T and 3T->7T transitions exist; construction rejects
/// anything else.
class FieldTask {
 public:
  FieldTask(Modality modality, Field source, Field target);

  static FieldTask lowfield(Modality m) { return {m, Field::mT64, Field::T3}; }
  static FieldTask ultrahigh(Modality m) { return {m, Field::T3, Field::T7}; }

  /// Parses "<modality>:<transition>", e.g. "T1:64mT_to_3T".
  static FieldTask parse(std::string_view s);

  Modality modality() const { return modality_; }
  Field source() const { return source_; }
  Field target() const { return target_; }

  /// Transition key shared by all modalities, e.g. "64mT_to_3T".
  std::string transition() const;

  /// "MRI T1 sequence enhancement from 64mT to 3T magnetic field"
  std::string prompt() const;

  /// Row in the condition embedding table: transition-major, modality-minor.
  std::size_t index() const;
  static constexpr std::size_t kCount = 6;
  static FieldTask from_index(std::size_t i);

  bool operator==(const FieldTask&) const = default;

 private:
  Modality modality_;
  Field source_;
  Field target_;
};

inline constexpr std::string_view kLowfieldTransition = "64mT_to_3T";
inline constexpr std::string_view kUltrahighTransition = "3T_to_7T";

}  // namespace unifield
