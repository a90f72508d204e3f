#include "cssam/synthetic.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <random>
#include <string>

#include "cssam/error.hpp"

namespace cssam::synthetic {

namespace {

constexpr std::array<const char*, 20> kVerbs = {
    "save",   "load",   "read",   "write",    "copy",     "delete", "find",  "sort",  "parse", "convert",
    "append", "remove", "count",  "validate", "encode",   "decode", "merge", "split", "print", "compress"};
constexpr std::array<const char*, 10> kObjects = {"string", "list",    "map",   "buffer", "array",
                                                  "record", "message", "token", "config", "image"};
constexpr std::array<const char*, 10> kTargets = {"file",    "stream", "socket",    "cache", "database",
                                                  "queue",   "console", "directory", "table", "server"};

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string method_body(const std::string& verb, const std::string& object, const std::string& target,
                        std::size_t variant) {
  const std::string obj_type = capitalize(object);
  const std::string tgt_type = capitalize(target);
  const std::string name = verb + obj_type + "To" + tgt_type;
  switch (variant % 4) {
    case 0:
      return "public void " + name + "(" + obj_type + " " + object + ", " + tgt_type + " " + target + ") {\n" +
             "    if (" + target + " == null) {\n" +
             "        throw new IllegalArgumentException(\"" + target + "\");\n" +
             "    }\n" +
             "    " + target + "." + verb + "(" + object + ");\n" +
             "}\n";
    case 1:
      return "public boolean " + name + "(" + obj_type + " " + object + ", " + tgt_type + " " + target + ") {\n" +
             "    int count = 0;\n" +
             "    for (" + obj_type + " item : " + object + ".items()) {\n" +
             "        " + target + "." + verb + "(item);\n" +
             "        count += 1;\n" +
             "    }\n" +
             "    return count > 0;\n" +
             "}\n";
    case 2:
      return "public static " + obj_type + " " + name + "(" + tgt_type + " " + target + ", " + obj_type + " " +
             object + ") throws IOException {\n" +
             "    " + obj_type + " result = " + target + "." + verb + obj_type + "(" + object + ");\n" +
             "    " + target + ".flush();\n" +
             "    return result;\n" +
             "}\n";
    default:
      return "private int " + name + "(" + obj_type + " " + object + ", " + tgt_type + " " + target + ") {\n" +
             "    try {\n" +
             "        return " + target + "." + verb + "(" + object + ", " + object + ".size());\n" +
             "    } catch (Exception e) {\n" +
             "        return -1;\n" +
             "    }\n" +
             "}\n";
  }
}

std::string docstring(const std::string& verb, const std::string& object, const std::string& target,
                      std::size_t variant) {
  switch (variant % 3) {
    case 0:
      return capitalize(verb) + " the " + object + " into the " + target + ".";
    case 1:
      return capitalize(verb) + " a " + object + " using the given " + target + ".";
    default:
      return "Helper to " + verb + " the " + object + " with a " + target + ".";
  }
}

}  // namespace

std::size_t combination_count() { return kVerbs.size() * kObjects.size() * kTargets.size(); }

std::vector<corpus::CodeDocPair> generate(const Options& options) {
  if (options.count > combination_count()) {
    throw ConfigError("synthetic corpus: at most " + std::to_string(combination_count()) + " records");
  }
  std::vector<std::size_t> combos(combination_count());
  std::iota(combos.begin(), combos.end(), 0);
  std::mt19937_64 rng(options.seed);
  std::shuffle(combos.begin(), combos.end(), rng);

  std::vector<corpus::CodeDocPair> out;
  out.reserve(options.count);
  for (std::size_t n = 0; n < options.count; ++n) {
    const std::size_t c = combos[n];
    const std::string verb = kVerbs[c / (kObjects.size() * kTargets.size())];
    const std::string object = kObjects[(c / kTargets.size()) % kObjects.size()];
    const std::string target = kTargets[c % kTargets.size()];
    const std::size_t variant = static_cast<std::size_t>(rng());
    out.push_back(corpus::CodeDocPair{"syn-" + std::to_string(n), method_body(verb, object, target, variant),
                                      docstring(verb, object, target, variant >> 8), "java"});
  }
  return out;
}

}  // namespace cssam::synthetic
