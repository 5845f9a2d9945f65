#pragma once

#include <gtest/gtest.h>

#include "compdoc/error.hpp"
#include "files.hpp"

// Runs `stmt` and checks that it throws compdoc::Error with code `errc`.
#define EXPECT_ERRC(stmt, errc)                                                       \
  do {                                                                                \
    try {                                                                             \
      stmt;                                                                           \
      ADD_FAILURE() << #stmt " did not throw";                                       \
    } catch (const compdoc::Error& e_) {                                              \
      EXPECT_EQ(e_.code(), errc) << e_.what();                                        \
    }                                                                                 \
  } while (0)

// As EXPECT_ERRC and also checks that the message mentions `needle`.
#define EXPECT_ERRC_MSG(stmt, errc, needle)                                           \
  do {                                                                                \
    try {                                                                             \
      stmt;                                                                           \
      ADD_FAILURE() << #stmt " did not throw";                                       \
    } catch (const compdoc::Error& e_) {                                              \
      EXPECT_EQ(e_.code(), errc) << e_.what();                                        \
      EXPECT_NE(std::string(e_.what()).find(needle), std::string::npos) << e_.what(); \
    }                                                                                 \
  } while (0)
