#include "unifield/task.hpp"

#include "unifield/volume.hpp"

namespace unifield {

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::T1: return "T1";
    case Modality::T2: return "T2";
    case Modality::FLAIR: return "FLAIR";
  }
  return "?";
}

std::string_view to_string(Field f) {
  switch (f) {
    case Field::mT64: return "64mT";
    case Field::T3: return "3T";
    case Field::T7: return "7T";
  }
  return "?";
}

Modality parse_modality(std::string_view s) {
  if (s == "T1") return Modality::T1;
  if (s == "T2") return Modality::T2;
  if (s == "FLAIR") return Modality::FLAIR;
  throw InvalidArgument("unknown modality '" + std::string(s) + "'");
}

Field parse_field(std::string_view s) {
  if (s == "64mT") return Field::mT64;
  if (s == "3T") return Field::T3;
  if (s == "7T") return Field::T7;
  throw InvalidArgument("unknown field strength '" + std::string(s) + "'");
}

FieldTask::FieldTask(Modality modality, Field source, Field target)
    : modality_(modality), source_(source), target_(target) {
  const bool ok = (source == Field::mT64 && target == Field::T3) ||
                  (source == Field::T3 && target == Field::T7);
  if (!ok)
    throw InvalidArgument("unsupported field transition " + std::string(to_string(source)) +
                          " -> " + std::string(to_string(target)));
}

FieldTask FieldTask::parse(std::string_view s) {
  const auto colon = s.find(':');
  if (colon == std::string_view::npos)
    throw InvalidArgument("task must look like <modality>:<src>_to_<dst>, got '" +
                          std::string(s) + "'");
  const Modality m = parse_modality(s.substr(0, colon));
  const auto tr = s.substr(colon + 1);
  const auto sep = tr.find("_to_");
  if (sep == std::string_view::npos)
    throw InvalidArgument("malformed transition '" + std::string(tr) + "'");
  return FieldTask(m, parse_field(tr.substr(0, sep)), parse_field(tr.substr(sep + 4)));
}

std::string FieldTask::transition() const {
  return std::string(to_string(source_)) + "_to_" + std::string(to_string(target_));
}

std::string FieldTask::prompt() const {
  return "MRI " + std::string(to_string(modality_)) + " sequence enhancement from " +
         std::string(to_string(source_)) + " to " + std::string(to_string(target_)) +
         " magnetic field";
}

std::size_t FieldTask::index() const {
  const std::size_t tr = source_ == Field::mT64 ? 0 : 1;
  return tr * 3 + static_cast<std::size_t>(modality_);
}

FieldTask FieldTask::from_index(std::size_t i) {
  if (i >= kCount) throw InvalidArgument("task index out of range");
  const auto m = static_cast<Modality>(i % 3);
  return i < 3 ? lowfield(m) : ultrahigh(m);
}

}  // namespace unifield
