#pragma once

#include <filesystem>
#include <string>

#include "fbmin/grid.hpp"

namespace fbmin::io {

// CSV layout: first line "nx,ny,ax,bx,ay,by" (the values), then one line per
// grid row j = 0..ny-1 holding nx comma-separated values.
void write_csv(const ScalarField& f, const std::filesystem::path& path);
ScalarField read_csv(const std::filesystem::path& path);

// Binary layout: magic "FBM1", u32 nx, u32 ny, f64 ax, bx, ay, by, then
// nx*ny row-major f64. Everything little-endian.
void write_fbm(const ScalarField& f, const std::filesystem::path& path);
ScalarField read_fbm(const std::filesystem::path& path);

// Binary PGM (P5), top row = largest y. 255 marks mask nodes, 0 the rest.
void write_pgm(const Mask& mask, const std::filesystem::path& path);
// Field panel scaled linearly from [0, max] to [0, 255].
void write_pgm(const ScalarField& f, const std::filesystem::path& path);

// Reads a P5 image written by write_pgm back into raw bytes (row-major, top row first).
std::vector<unsigned char> read_pgm(const std::filesystem::path& path, std::size_t& width, std::size_t& height);

}  // namespace fbmin::io
