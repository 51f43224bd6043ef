#include <gtest/gtest.h>

#include <sstream>

#include "pflab/errors.hpp"
#include "pflab/field_io.hpp"
#include "test_util.hpp"

using namespace pflab;

TEST(FieldIo, RoundTripRowsAndCsv) {
    std::mt19937_64 rng(11);
    for (const Grid& g : {Grid::line(13, 1.0), Grid::rect(7, 5, 2.0, 1.0, Boundary::Periodic)}) {
        const Field f = pflab::test::random_field(g, rng);
        for (SnapshotFormat fmt : {SnapshotFormat::Rows, SnapshotFormat::Csv}) {
            std::stringstream ss;
            write_field(ss, f, fmt);
            const Field back = read_field(ss);
            EXPECT_TRUE(back.grid() == g);
            EXPECT_EQ(back.data(), f.data());
        }
    }
}

TEST(FieldIo, HeaderLayout) {
    std::stringstream ss;
    write_field(ss, Field(Grid::rect(2, 3, 1.0, 1.5), 0.25));
    std::string header;
    std::getline(ss, header);
    EXPECT_EQ(header, "2 3 0.5 0.5 neumann");
}

TEST(FieldIo, RejectsMalformed) {
    std::stringstream short_data("3 0.5 neumann\n1 2\n");
    EXPECT_THROW(read_field(short_data), ParseError);
    std::stringstream bad_bc("2 0.5 sideways\n1 2\n");
    EXPECT_THROW(read_field(bad_bc), ParseError);
    std::stringstream nan("2 0.5 neumann\n1 nan\n");
    EXPECT_THROW(read_field(nan), ParseError);
}
