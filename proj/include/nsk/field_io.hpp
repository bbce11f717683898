#pragma once
#include <string>

#include "nsk/field.hpp"

namespace nsk {

// NSK1 container: little-endian binary grid fields.
//   bytes 0..3   magic "NSK1"
//   i64          kind (0 scalar, 1 complex, 2 vector, 3 complex-vector)
//   i64          ncomp
//   i64 nx, i64 ny
//   f64 origin.x, f64 origin.y, f64 width, f64 height
//   f64[ny][nx][rcomp]  row-major samples, channel fastest
void write_nsk1(const std::string& path, const GridField& f);
GridField read_nsk1(const std::string& path);

// CSV with a self-describing header row:
//   # nsk-field kind=<k> ncomp=<m> nx=<nx> ny=<ny> origin=<x>,<y> extent=<w>,<h>
//   i,j,x,y,c0,c1,...
// Complex slots are written as re/im column pairs.
void write_csv(const std::string& path, const GridField& f);
GridField read_csv(const std::string& path);

// Dispatch on extension: ".nsk" binary, ".csv" text.
void write_field(const std::string& path, const GridField& f);
GridField read_field(const std::string& path);

} // namespace nsk
