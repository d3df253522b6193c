#ifndef SDM_TYPES_HPP
#define SDM_TYPES_HPP

#include <cstddef>
#include <cstdint>
#include <string>

#include "sdm/errors.hpp"

namespace sdm {

/// Global node / edge / element index.
using GlobalId = std::int64_t;

enum class DataType : std::uint32_t { Int32 = 0, Float64 = 1 };

constexpr std::size_t element_size(DataType t) {
    return t == DataType::Int32 ? 4 : 8;
}

enum class GroupKind : std::uint32_t { Result = 0, Import = 1 };

/// File organization: L1 = file per dataset per timestep, L2 = file per
/// dataset with timesteps appended, L3 = one file per data group.
enum class OrgLevel : int { L1 = 1, L2 = 2, L3 = 3 };

inline OrgLevel org_level_from_int(int v) {
    if (v < 1 || v > 3)
        throw ValidationError("file organization level must be 1, 2, or 3, got " +
                              std::to_string(v));
    return static_cast<OrgLevel>(v);
}

std::string to_string(DataType t);
DataType data_type_from_string(const std::string& s);

/// One named dataset inside a data group.
struct DatasetSpec {
    std::string name;
    DataType type = DataType::Float64;

    bool operator==(const DatasetSpec&) const = default;
};

} // namespace sdm

#endif
