#pragma once

#include <string>

#include "latecount/ballots.hpp"
#include "latecount/geodata.hpp"

namespace latecount::fixture {

struct Fixture {
    geo::SettlementDataset settlements;
    std::vector<ballots::TallyRow> tallies;
};

// Deterministic synthetic country: 18 regions, population concentrated in
// the biggest towns of 15 of them, and 3 sparse regions whose people
// mostly live far from the main town. Tallies give the challenger a
// half-time lead everywhere, a final incumbent win country-wide, and an
// incumbent share that on the whole falls with distance (but rises,
// noisily, inside the sparse regions).
Fixture make_country_fixture();

// Writes settlements.csv and tallies.csv under dir.
void write_fixture(const Fixture& fixture, const std::string& dir);

}  // namespace latecount::fixture
