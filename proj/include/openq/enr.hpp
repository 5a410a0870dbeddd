#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <vector>

namespace openq {

class Qobj;

// Composite space restricted to total excitation number <= n_exc.
// States are enumerated in graded lexicographic order: by total excitation,
// then lexicographically in the occupation tuple.
struct EnrSpace {
  std::vector<std::size_t> dims;
  std::size_t n_exc = 0;
  std::vector<std::vector<std::size_t>> states;
  std::map<std::vector<std::size_t>, std::size_t> index;

  std::size_t size() const { return states.size(); }
  bool contains(const std::vector<std::size_t>& occ) const { return index.count(occ) != 0; }
  bool operator==(const EnrSpace& o) const { return dims == o.dims && n_exc == o.n_exc; }
};

std::shared_ptr<const EnrSpace> enr_space(const std::vector<std::size_t>& dims, std::size_t n_exc);

// Annihilation operator for each subsystem, acting on the restricted space.
std::vector<Qobj> enr_destroy(const std::vector<std::size_t>& dims, std::size_t n_exc);
Qobj enr_fock(const std::vector<std::size_t>& dims, std::size_t n_exc,
              const std::vector<std::size_t>& occupations);
Qobj enr_identity(const std::vector<std::size_t>& dims, std::size_t n_exc);

}  // namespace openq
