#include <algorithm>
#include <cstdint>
#include <fstream>

#include <gtest/gtest.h>

#include "promptrank/errors.h"
#include "promptrank/prompt_template.h"

namespace promptrank {
namespace {

TEST(PromptTemplate, RenderEncoderIsVerbatim) {
  const auto t = PromptTemplate::Create("t", "Book:\"[D]\"", "This book mainly talks about [C]");
  EXPECT_EQ(t.RenderEncoder("AI."), "Book:\"AI.\"");
  EXPECT_EQ(t.RenderEncoder("say \"hi\" [C]"), "Book:\"say \"hi\" [C]\"");
  EXPECT_EQ(PromptTemplate::Create("id", "[D]", "[C]").RenderEncoder("x"), "x");
}

TEST(PromptTemplate, DecoderPrefix) {
  EXPECT_EQ(PromptTemplate::Create("a", "[D]", "This book mainly talks about [C]").DecoderPrefix(),
            "This book mainly talks about ");
  EXPECT_EQ(PromptTemplate::Create("b", "[D]", "[C]").DecoderPrefix(), "");
  EXPECT_EQ(PromptTemplate::Create("c", "[D]", "Keywords of this book are [C]").DecoderPrefix(),
            "Keywords of this book are ");
}

TEST(PromptTemplate, PrefixPlusCandidateIsFullDecoderText) {
  for (const auto& id : BuiltinRegistry().ids()) {
    const auto& t = BuiltinRegistry().Get(id);
    for (const std::string cand : {"x", "deep learning", "A-B c"}) {
      EXPECT_EQ(t.DecoderPrefix() + cand, t.RenderDecoder(cand)) << id;
    }
  }
}

TEST(PromptTemplate, RejectsBadPlaceholders) {
  EXPECT_THROW(PromptTemplate::Create("x", "no doc", "[C]"), std::invalid_argument);
  EXPECT_THROW(PromptTemplate::Create("x", "[D] [D]", "[C]"), std::invalid_argument);
  EXPECT_THROW(PromptTemplate::Create("x", "[D]", "no candidate"), std::invalid_argument);
  EXPECT_THROW(PromptTemplate::Create("x", "[D]", "[C] [C]"), std::invalid_argument);
  EXPECT_THROW(PromptTemplate::Create("x", "[D]", "[C] trailing"), std::invalid_argument);
  EXPECT_THROW(PromptTemplate::Create("", "[D]", "[C]"), std::invalid_argument);
}

TEST(PromptTemplate, PrefixWordCount) {
  EXPECT_EQ(PromptTemplate::Create("a", "[D]", "This book mainly talks about [C]").decoder_prefix_len_words(), 5u);
  EXPECT_EQ(PromptTemplate::Create("b", "[D]", "[C]").decoder_prefix_len_words(), 0u);
}

TEST(BuiltinRegistry, DefaultTemplate) {
  const auto& t = BuiltinRegistry().Get("default");
  EXPECT_EQ(t.encoder_template(), "Book:\"[D]\"");
  EXPECT_EQ(t.decoder_template(), "This book mainly talks about [C]");
  EXPECT_EQ(&BuiltinRegistry().Get("len5-default"), &t);
  EXPECT_EQ(&BuiltinRegistry().Get("len5-3"), &t);
}

TEST(BuiltinRegistry, LengthGroups) {
  const auto& reg = BuiltinRegistry();
  EXPECT_EQ(reg.Group("len0").size(), 1u);
  EXPECT_EQ(reg.Group("len2").size(), 4u);
  EXPECT_EQ(reg.Group("len5").size(), 4u);
  EXPECT_EQ(reg.Group("len10").size(), 4u);
  ASSERT_EQ(reg.Group("len20").size(), 4u);
  for (const auto& group : {"len0", "len2", "len5"}) {
    const std::size_t words = std::stoul(std::string(group).substr(3));
    for (const auto& id : reg.Group(group)) {
      EXPECT_EQ(reg.Get(id).decoder_prefix_len_words(), words) << id;
    }
  }
  // The longer groups are nominal lengths; they only need to be ordered.
  auto longest = [&](const char* g) {
    std::size_t m = 0;
    for (const auto& id : reg.Group(g)) m = std::max(m, reg.Get(id).decoder_prefix_len_words());
    return m;
  };
  auto shortest = [&](const char* g) {
    std::size_t m = SIZE_MAX;
    for (const auto& id : reg.Group(g)) m = std::min(m, reg.Get(id).decoder_prefix_len_words());
    return m;
  };
  EXPECT_LT(longest("len5"), shortest("len10"));
  EXPECT_LT(longest("len10"), shortest("len20"));
}

TEST(BuiltinRegistry, NounVariantsAndContentTemplates) {
  const auto& reg = BuiltinRegistry();
  for (const auto* noun : {"book", "passage", "news", "text", "paper"}) {
    const auto* t = reg.Find(std::string("noun-") + noun);
    ASSERT_NE(t, nullptr) << noun;
  }
  EXPECT_EQ(reg.Get("content-1").decoder_template(), "[C]");
  EXPECT_EQ(reg.Get("content-2").decoder_template(), "Keywords of this book are [C]");
  EXPECT_EQ(&reg.Get("content-4"), &reg.Get("default"));
  EXPECT_EQ(reg.Find("no-such-template"), nullptr);
  EXPECT_THROW(reg.Get("no-such-template"), InputError);
}

TEST(TemplateRegistry, DuplicatesRejected) {
  TemplateRegistry reg;
  reg.Add(PromptTemplate::Create("a", "[D]", "[C]"));
  EXPECT_THROW(reg.Add(PromptTemplate::Create("a", "[D]", "x [C]")), std::invalid_argument);
  reg.AddAlias("b", "a");
  EXPECT_THROW(reg.AddAlias("b", "a"), std::invalid_argument);
  EXPECT_EQ(&reg.Get("b"), &reg.Get("a"));
}

TEST(LoadTemplates, ReadsArrayAndObjectForms) {
  const auto path = std::filesystem::temp_directory_path() / "promptrank_templates.json";
  std::ofstream(path) << R"([{"id":"mine","encoder":"Paper:[D]","decoder":"It is about [C]"}])";
  auto reg = LoadTemplates(path);
  EXPECT_EQ(reg.Get("mine").DecoderPrefix(), "It is about ");
  std::ofstream(path) << R"({"templates":[{"id":"m2","encoder":"[D]","decoder":"[C]"}]})";
  EXPECT_NE(LoadTemplates(path).Find("m2"), nullptr);
  std::ofstream(path) << R"([{"id":"bad","encoder":"no placeholder","decoder":"[C]"}])";
  EXPECT_THROW(LoadTemplates(path), InputError);
  std::filesystem::remove(path);
  EXPECT_THROW(LoadTemplates(path), InputError);
}

}  // namespace
}  // namespace promptrank
